//! The AI spectrum does not depend on the parametrization.

use qai::estimation::{incompat_spectrum, reparametrize, EstimationReport, Tolerances};
use qai::linalg::gellmann_basis;
use qai::linalg::RMatrix;
use qai::model::{mixture_coordinates, qudit_mixture};
use qai::sampler::{random_state, sample_rng};
use rand::Rng;

fn main() -> qai::Result<()> {
    let mut rng = sample_rng(3);
    let rho = random_state(3, &mut rng)?.rho;
    let basis = gellmann_basis(3)?;
    let model = qudit_mixture(&mixture_coordinates(&rho, &basis), &basis)?;
    let report = EstimationReport::from_model(&model, &Tolerances::default())?;
    let p = report.num_params();
    println!("original      {:.10?}", &report.i_spectrum[..p / 2]);
    for _ in 0..3 {
        let b = RMatrix::from_fn(p, p, |i, j| {
            rng.random_range(-0.5..0.5) + if i == j { 2.0 } else { 0.0 }
        });
        let (q, u) = reparametrize(&report.q, &report.u, &b)?;
        let s = incompat_spectrum(&q, &u)?;
        println!("reparametrized {:.10?}", &s[..p / 2]);
    }
    Ok(())
}
