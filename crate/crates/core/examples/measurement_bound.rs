//! Scalar bounds for a qubit: SLD bound, the Holevo range from R, and a fixed measurement.

use qai::estimation::{
    born_probabilities, cfim, holevo_range, projective_measurement, qfim_inverse, scalar_sld_bound,
    EstimationReport, Tolerances, WeightMatrix,
};
use qai::linalg::{CMatrix, C64};
use qai::model::bloch_qubit;

fn main() -> qai::Result<()> {
    let (r, theta, phi) = (0.6, 1.1, 0.4);
    let model = bloch_qubit(r, theta, phi)?;
    let report = EstimationReport::from_model(&model, &Tolerances::default())?;
    let w = WeightMatrix::identity(3);
    let cs = scalar_sld_bound(&report.q, &w)?;
    let (lo, hi) = holevo_range(cs, report.r);
    println!("SLD bound {cs:.6}, Holevo bound in [{lo:.6}, {hi:.6}]");
    println!(
        "Q^-1 diagonal {:?}",
        qfim_inverse(&report.q)?.diagonal().as_slice()
    );

    // Measuring sigma_z alone only sees one direction of the Bloch vector.
    let povm = projective_measurement(&CMatrix::identity(2, 2))?;
    let f = cfim(
        |l| born_probabilities(&model.eval(l)?, &povm),
        &[r, theta, phi],
        1e-6,
    )?;
    println!("sigma_z Fisher matrix rank {}", f.rank(1e-9));

    // A rotated basis for comparison.
    let s = C64::new(0.5f64.sqrt(), 0.0);
    let hadamard = CMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
    let povm = projective_measurement(&hadamard)?;
    let f = cfim(
        |l| born_probabilities(&model.eval(l)?, &povm),
        &[r, theta, phi],
        1e-6,
    )?;
    println!(
        "sigma_x Fisher information on r: {:.6}  (quantum: {:.6})",
        f[(0, 0)],
        report.q[(0, 0)]
    );
    Ok(())
}
