//! AI of thermal states for fixed Hamiltonians as the inverse temperature grows.

use qai::estimation::Tolerances;
use qai::sampler::gibbs_curve;

fn main() -> qai::Result<()> {
    let betas: Vec<f64> = (0..=8).map(|k| k as f64 * 1.5).collect();
    let hamiltonians: [&[f64]; 3] = [
        &[1.0, 0.0, -1.0],
        &[1.0, 1.0, 0.0, 0.0],
        &[1.0, 0.5, 0.0, -0.5],
    ];
    for deltas in hamiltonians {
        println!("energies {deltas:?}");
        println!(
            "{:>6} {:>8} {:>10} {:>10}",
            "beta", "mu", "tanh", "pipeline"
        );
        for pt in gibbs_curve(deltas, &betas, 1, &Tolerances::default())? {
            let pipeline = pt.r_pipeline.map_or("-".to_string(), |r| format!("{r:.6}"));
            println!(
                "{:>6.2} {:>8.5} {:>10.6} {pipeline:>10}",
                pt.beta, pt.mu, pt.r
            );
        }
        println!();
    }
    Ok(())
}
