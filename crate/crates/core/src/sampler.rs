//! Seeded random states and the sweep experiments built on them.
//!
//! Every sample owns its RNG stream, seeded from `(master seed, index)`, so
//! output is identical whatever the thread count.

use std::io::Write;

use log::{debug, info};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{EstimationReport, Tolerances};
use crate::io::{fmt_f64, write_json};
use crate::linalg::{gellmann_basis, CMatrix, DensityMatrix, C64};
use crate::model::{beta_delta_m, from_spectrum_unitary, mixture_coordinates, qudit_mixture};

/// Minimum spacing between sampled eigenvalues; closer draws are redrawn.
pub const MIN_SPECTRAL_GAP: f64 = 1e-10;

/// Redraw budget per sample before giving up.
pub const MAX_REDRAWS: usize = 1000;

/// Seed of sample `index` in a run with master seed `master` (SplitMix64 mixing).
pub fn sample_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sample_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(())
}

/// Uniform point on the open probability simplex (normalized exponentials).
pub fn sample_simplex<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_dim(d)?;
    loop {
        let e: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = e.iter().sum();
        if e.iter().all(|&x| x > 0.0) {
            return Ok(e.into_iter().map(|x| x / total).collect());
        }
    }
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<CMatrix> {
    check_dim(d)?;
    let z = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// A random state together with the draws that produced it.
#[derive(Debug, Clone)]
pub struct RandomState {
    pub spectrum: Vec<f64>,
    pub unitary: CMatrix,
    pub rho: DensityMatrix,
}

/// `U diag(x) U†` with `x` uniform on the simplex and `U` Haar.
pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<RandomState> {
    let spectrum = sample_simplex(d, rng)?;
    let unitary = sample_haar_unitary(d, rng)?;
    let rho = DensityMatrix::from_spectrum(&spectrum, &unitary)?;
    Ok(RandomState {
        spectrum,
        unitary,
        rho,
    })
}

fn min_gap(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

/// One row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub d: usize,
    /// Seed of this sample's RNG stream.
    pub seed: u64,
    pub purity: f64,
    pub ai: f64,
    pub beta_delta_m: f64,
    /// `|R − tanh(βΔ_M/2)|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    /// Draws rejected for a near-degenerate spectrum.
    pub redrawn: usize,
    /// Samples dropped because the pipeline reported a rank-deficient state.
    pub skipped: usize,
}

impl SweepOutcome {
    pub fn max_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    /// Smallest purity among samples with `R > threshold`.
    pub fn min_purity_above(&self, threshold: f64) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.ai > threshold)
            .map(|r| r.purity)
            .min_by(f64::total_cmp)
    }
}

enum SampleResult {
    Record(SweepRecord, usize),
    Skipped(usize),
}

fn sweep_sample(
    d: usize,
    seed: u64,
    basis: &crate::linalg::GeneratorBasis,
    tol: &Tolerances,
) -> Result<SampleResult> {
    let mut rng = sample_rng(seed);
    let mut redrawn = 0;
    let spectrum = loop {
        let x = sample_simplex(d, &mut rng)?;
        if min_gap(&x) >= MIN_SPECTRAL_GAP {
            break x;
        }
        redrawn += 1;
        if redrawn >= MAX_REDRAWS {
            return Err(Error::Domain(format!(
                "sample {seed}: no nondegenerate spectrum drawn"
            )));
        }
    };
    let unitary = sample_haar_unitary(d, &mut rng)?;
    let (rho, bdm) = from_spectrum_unitary(&spectrum, &unitary)?;
    let gamma = mixture_coordinates(&rho, basis);
    let model = match qudit_mixture(&gamma, basis) {
        Ok(m) => m,
        Err(Error::Domain(_)) => return Ok(SampleResult::Skipped(redrawn)),
        Err(e) => return Err(e),
    };
    let report = match EstimationReport::from_model(&model, tol) {
        Ok(r) => r,
        Err(Error::RankDeficient { .. }) => return Ok(SampleResult::Skipped(redrawn)),
        Err(e) => return Err(e),
    };
    let purity: f64 = spectrum.iter().map(|x| x * x).sum();
    Ok(SampleResult::Record(
        SweepRecord {
            d,
            seed,
            purity,
            ai: report.r,
            beta_delta_m: bdm,
            residual: (report.r - (bdm / 2.0).tanh()).abs(),
        },
        redrawn,
    ))
}

/// Full-tomography AI of `n_samples` random `d`-level states.
///
/// Runs on the current rayon pool; the result is ordered by sample index.
pub fn sweep(d: usize, n_samples: usize, seed: u64, tol: &Tolerances) -> Result<SweepOutcome> {
    check_dim(d)?;
    tol.validate()?;
    let basis = gellmann_basis(d)?;
    let results: Vec<Result<SampleResult>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| sweep_sample(d, sample_seed(seed, i), &basis, tol))
        .collect();
    let mut out = SweepOutcome {
        records: Vec::with_capacity(n_samples),
        redrawn: 0,
        skipped: 0,
    };
    for r in results {
        match r? {
            SampleResult::Record(rec, redrawn) => {
                out.records.push(rec);
                out.redrawn += redrawn;
            }
            SampleResult::Skipped(redrawn) => {
                out.skipped += 1;
                out.redrawn += redrawn;
            }
        }
    }
    if out.skipped > 0 {
        info!(
            "sweep d={d}: skipped {} rank-deficient samples",
            out.skipped
        );
    }
    if out.redrawn > 0 {
        info!(
            "sweep d={d}: redrew {} near-degenerate spectra",
            out.redrawn
        );
    }
    debug!("sweep d={d}: max residual {:e}", out.max_residual());
    Ok(out)
}

pub const SWEEP_CSV_HEADER: [&str; 6] = ["d", "seed", "purity", "ai", "beta_delta_m", "residual"];

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(SWEEP_CSV_HEADER).map_err(io_err)?;
    for r in records {
        w.write_record([
            r.d.to_string(),
            r.seed.to_string(),
            fmt_f64(r.purity),
            fmt_f64(r.ai),
            fmt_f64(r.beta_delta_m),
            fmt_f64(r.residual),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line.
pub fn write_sweep_jsonl<W: Write>(records: &[SweepRecord], mut writer: W) -> Result<()> {
    for r in records {
        write_json(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// A point of a fixed-Hamiltonian AI curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GibbsPoint {
    pub beta: f64,
    pub mu: f64,
    /// `tanh(βΔ_M/2)`.
    pub r: f64,
    /// Pipeline AI of a randomly rotated copy; `None` when the state is
    /// numerically rank deficient.
    pub r_pipeline: Option<f64>,
}

/// Normalized `exp(−βΔ_i)`.
pub fn gibbs_spectrum(deltas: &[f64], beta: f64) -> Vec<f64> {
    let min = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = deltas.iter().map(|d| (-beta * (d - min)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// `(μ, R)` along `β` for a Hamiltonian with spectrum `deltas`.
pub fn gibbs_curve(
    deltas: &[f64],
    betas: &[f64],
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<GibbsPoint>> {
    let d = deltas.len();
    check_dim(d)?;
    if let Some(bad) = deltas.iter().find(|x| !(x.abs() <= 1.0)) {
        return Err(Error::Domain(format!("energy {bad} lies outside [-1, 1]")));
    }
    if let Some(bad) = betas.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
        return Err(Error::Domain(format!(
            "inverse temperature {bad} must be nonnegative"
        )));
    }
    let spread = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let basis = gellmann_basis(d)?;
    betas
        .par_iter()
        .enumerate()
        .map(|(i, &beta)| {
            let x = gibbs_spectrum(deltas, beta);
            let mu = x.iter().map(|v| v * v).sum();
            let mut rng = sample_rng(sample_seed(seed, i as u64));
            let u = sample_haar_unitary(d, &mut rng)?;
            let r_pipeline = if x.iter().all(|&v| v > tol.rank_tol) {
                let rho = DensityMatrix::from_spectrum(&x, &u)?;
                let model = qudit_mixture(&mixture_coordinates(&rho, &basis), &basis)?;
                match EstimationReport::from_model(&model, tol) {
                    Ok(rep) => Some(rep.r),
                    Err(Error::RankDeficient { .. }) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            Ok(GibbsPoint {
                beta,
                mu,
                r: (beta * spread / 2.0).tanh(),
                r_pipeline,
            })
        })
        .collect()
}

/// Conjectured spectrum of `i Q⁻¹ U` for full tomography of a state with
/// eigenvalues `x`: `±(x_i − x_j)/(x_i + x_j)` over pairs, zero-padded to
/// `d² − 1` entries, descending.
pub fn conjectured_spectrum(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut s = Vec::with_capacity(d * d - 1);
    for i in 0..d {
        for j in 0..i {
            let t = ((x[i] - x[j]) / (x[i] + x[j])).abs();
            s.push(t);
            s.push(-t);
        }
    }
    s.resize(d * d - 1, 0.0);
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest deviation between the pipeline spectrum of full tomography at
/// `rho` and [`conjectured_spectrum`].
pub fn i_spectrum_conjecture_check(rho: &DensityMatrix, tol: &Tolerances) -> Result<f64> {
    let basis = gellmann_basis(rho.dim())?;
    let model = qudit_mixture(&mixture_coordinates(rho, &basis), &basis)?;
    let report = EstimationReport::from_model(&model, tol)?;
    let expected = conjectured_spectrum(&rho.eig().values);
    Ok(report
        .i_spectrum
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `tanh(βΔ_M/2)` for a full-rank spectrum.
pub fn conjectured_ai(x: &[f64]) -> f64 {
    (beta_delta_m(x) / 2.0).tanh()
}
