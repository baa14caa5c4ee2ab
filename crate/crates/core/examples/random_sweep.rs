//! Random full-rank qutrits: the AI against purity, and the tanh identity residual.

use qai::estimation::Tolerances;
use qai::sampler::sweep;

fn main() -> qai::Result<()> {
    let d = 3;
    let outcome = sweep(d, 2000, 7, &Tolerances::default())?;
    println!(
        "{} samples, {} redrawn, max |R - tanh(beta dM / 2)| = {:.2e}",
        outcome.records.len(),
        outcome.redrawn,
        outcome.max_residual()
    );

    let bins = 10;
    let mut hist = vec![(0usize, 0.0f64, 1.0f64); bins];
    for rec in &outcome.records {
        let b = ((rec.ai * bins as f64) as usize).min(bins - 1);
        let h = &mut hist[b];
        h.0 += 1;
        h.1 = h.1.max(rec.purity);
        h.2 = h.2.min(rec.purity);
    }
    println!("{:>9} {:>6} {:>8} {:>8}", "R", "count", "min mu", "max mu");
    for (b, (count, hi, lo)) in hist.iter().enumerate() {
        if *count > 0 {
            let from = b as f64 / bins as f64;
            println!(
                "{from:>4.1}-{:<4.1} {count:>6} {lo:>8.4} {hi:>8.4}",
                from + 0.1
            );
        }
    }
    if let Some(mu) = outcome.min_purity_above(0.99) {
        println!(
            "smallest purity with R > 0.99: {mu:.4} (1/(d-1) = {:.4})",
            1.0 / (d - 1) as f64
        );
    }
    Ok(())
}
