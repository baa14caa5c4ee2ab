//! The Gaussian AI recomputed from a truncated Fock-space density matrix.

use qai::estimation::Tolerances;
use qai::gaussian::{
    adaptive_n_max, fock_report, gaussian_report, Chart, GaussianParams, GAUSSIAN_FD_STEP,
};

fn main() -> qai::Result<()> {
    let tol = Tolerances::default();
    let p = GaussianParams::new(0.4, 0.1, 0.3, 0.6, 0.5)?;
    let n_max = adaptive_n_max(&p, 200)?;
    let phase_space = gaussian_report(&p, Chart::Polar, &tol)?;
    let fock = fock_report(&p, Chart::Polar, n_max, 1e-5, tol.eig_tol)?;
    println!("Fock cutoff {n_max}, phase-space step {GAUSSIAN_FD_STEP:e}");
    for (k, (a, b)) in phase_space
        .i_spectrum
        .iter()
        .zip(&fock.i_spectrum)
        .enumerate()
    {
        println!(
            "r_{k}  phase space {a:>13.9}  Fock {b:>13.9}  diff {:.1e}",
            (a - b).abs()
        );
    }
    Ok(())
}
