//! Damped oscillator: estimating frequency and loss rate along the evolution.

use qai::estimation::{EstimationReport, Tolerances};
use qai::gaussian::{
    evolve_lossy, excitation_parametrization, freq_loss_model, gaussian_report, integrate_moments,
    moments, Chart,
};

fn main() -> qai::Result<()> {
    let (omega, gamma) = (1.0, 0.5);
    let tol = Tolerances::default();
    let initial = excitation_parametrization(3.0, 0.5)?;
    let s0 = moments(&initial);
    println!(
        "{:>5} {:>9} {:>10} {:>10} {:>9}",
        "t", "mu", "R (5)", "R (w, g)", "ode err"
    );
    for k in 1..=10 {
        let t = k as f64 * 0.5;
        let st = evolve_lossy(&s0, omega, gamma, t)?;
        let ode = integrate_moments(&s0, omega, gamma, t, 2000);
        let err = (st.sigma - ode.sigma).amax().max((st.d - ode.d).amax());
        let p = st.to_params();
        let full: EstimationReport = gaussian_report(&p, Chart::for_params(&p), &tol)?;
        let two = freq_loss_model(&initial, omega, gamma, t, &tol)?;
        println!(
            "{t:>5.1} {:>9.6} {:>10.6} {:>10.6} {err:>9.1e}",
            st.purity(),
            full.r,
            two.r
        );
    }
    Ok(())
}
