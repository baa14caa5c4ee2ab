//! Single-mode Gaussian states: finite-difference geometry against the closed form.

use qai::estimation::{incompat_spectrum, Tolerances};
use qai::gaussian::{
    ai_gaussian, closed_form_qfim, closed_form_uhlmann, gaussian_report, Chart, GaussianParams,
};

fn main() -> qai::Result<()> {
    let tol = Tolerances::default();
    for n in [0.1, 0.5, 2.0] {
        let p = GaussianParams::new(0.3, -0.2, 0.4, 0.7, n)?;
        let report = gaussian_report(&p, Chart::Polar, &tol)?;
        let exact = incompat_spectrum(&closed_form_qfim(&p), &closed_form_uhlmann(&p))?;
        let worst = report
            .i_spectrum
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "N = {n:<4} mu = {:.6}  R = {:.9}  2mu/(1+mu^2) = {:.9}  spectrum error {worst:.1e}",
            p.purity(),
            report.r,
            ai_gaussian(p.purity())
        );
    }

    // Without squeezing the polar chart is singular; the Cartesian one is not.
    let p = GaussianParams::new(0.3, -0.2, 0.0, 0.0, 0.5)?;
    let chart = Chart::for_params(&p);
    let report = gaussian_report(&p, chart, &tol)?;
    println!("r = 0 in the {chart:?} chart: R = {:.9}", report.r);
    Ok(())
}
