//! Fixing parameters: the submodel AI stays between neighbouring full-model eigenvalues.

use qai::estimation::{EstimationReport, Tolerances};
use qai::gaussian::{gaussian_report, Chart, GaussianParams, POLAR_NAMES};

fn main() -> qai::Result<()> {
    let p = GaussianParams::new(0.3, -0.2, 0.4, 0.7, 0.5)?;
    let full: EstimationReport = gaussian_report(&p, Chart::Polar, &Tolerances::default())?;
    println!("full spectrum {:?}", full.i_spectrum);
    let subsets: [&[usize]; 5] = [&[2, 3], &[0, 4], &[0, 1], &[0, 1, 4], &[2, 3, 4]];
    for subset in subsets {
        let names: Vec<_> = subset.iter().map(|&i| POLAR_NAMES[i]).collect();
        let b = full.submodel_bounds(subset, 1e-8)?;
        println!(
            "{:<24} R = {:.6}  in [{:.6}, {:.6}]  {}",
            names.join(","),
            b.r_sub,
            b.lower,
            b.upper,
            if b.holds(1e-8) { "ok" } else { "violated" }
        );
    }
    Ok(())
}
