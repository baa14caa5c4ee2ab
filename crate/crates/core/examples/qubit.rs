//! Bloch-ball qubit in spherical coordinates: the AI equals the Bloch radius.

use qai::estimation::{EstimationReport, Tolerances};
use qai::model::bloch_qubit;

fn main() -> qai::Result<()> {
    let tol = Tolerances::default();
    println!(
        "{:>6} {:>12} {:>12} {:>6}",
        "r", "R", "sqrt(2mu-1)", "bound"
    );
    for r in [0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
        let model = bloch_qubit(r, 1.0, 0.5)?;
        let report = EstimationReport::from_model(&model, &tol)?;
        let mu = (1.0 + r * r) / 2.0;
        println!(
            "{r:>6.2} {:>12.9} {:>12.9} {:>6}",
            report.r,
            (2.0 * mu - 1.0).sqrt(),
            report.compat_bound
        );
    }
    Ok(())
}
