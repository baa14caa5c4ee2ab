//! Dense complex-Hermitian linear algebra.
//!
//! Everything downstream works with [`HermitianMatrix`] and [`DensityMatrix`]
//! newtypes over `nalgebra` dense matrices. Eigendecompositions are delegated
//! to `nalgebra::SymmetricEigen`, which handles complex Hermitian input; this
//! module only fixes the ordering contract (ascending eigenvalues) and the
//! validation tolerances.
//!
//! The symmetric logarithmic derivative (SLD) solver lives here as well since
//! it is a pure matrix-equation solve: given a full-rank state `rho` and a
//! traceless Hermitian `drho`, it returns the unique Hermitian `L` with
//! `(L rho + rho L) / 2 = drho`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;

/// Default lower bound on the eigenvalues of a state fed to the SLD solver.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Absolute Hermiticity tolerance, scaled by `max(1, max |a_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Trace and positivity tolerance used when validating density matrices.
pub const STATE_TOL: f64 = 1e-10;

/// Largest violation of `a_ij = conj(a_ji)`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates Hermiticity and stores the exactly symmetrized matrix.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let deviation = hermitian_deviation(&m);
        if deviation > HERMITIAN_TOL * max_abs(&m).max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::hermitize(m))
    }

    /// Projects an arbitrary square matrix onto its Hermitian part `(m + m†)/2`.
    pub fn hermitize(m: CMatrix) -> Self {
        let adj = m.adjoint();
        HermitianMatrix((m + adj) * C64::new(0.5, 0.0))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(CMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        HermitianMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self - (Tr[self]/d) 1`.
    pub fn traceless_part(&self) -> Self {
        let d = self.dim();
        let shift = self.trace() / d as f64;
        let mut m = self.0.clone();
        for i in 0..d {
            m[(i, i)] -= C64::new(shift, 0.0);
        }
        HermitianMatrix(m)
    }

    /// Conjugation `v self v†` by an arbitrary square matrix.
    pub fn conjugate_by(&self, v: &CMatrix) -> Self {
        Self::hermitize(v * &self.0 * v.adjoint())
    }

    pub fn eig(&self) -> HermitianEigen {
        eig_unchecked(&self.0)
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        HermitianMatrix(&self.0 * C64::new(rhs, 0.0))
    }
}

/// Eigendecomposition `A = V diag(values) V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let x = C64::new(self.values[j], 0.0);
            for i in 0..n {
                scaled[(i, j)] *= x;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// `V diag(f(x)) V†` for a complex-valued spectral function.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fx = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= fx;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }
}

fn eig_unchecked(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let se = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    HermitianEigen { values, vectors }
}

/// Eigendecomposition of a Hermitian matrix given as a raw complex matrix.
///
/// Input that deviates from Hermiticity beyond [`HERMITIAN_TOL`] is rejected
/// rather than silently symmetrized.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEigen> {
    let h = HermitianMatrix::new(a.clone())?;
    Ok(h.eig())
}

/// Real symmetric eigendecomposition, ascending.
pub fn symmetric_eig(m: &RMatrix) -> (Vec<f64>, RMatrix) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let se = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vectors = RMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// A unit-trace positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let tr = h.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = h.eig().min();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix(h))
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// Skips validation; callers construct `rho` from a known spectrum.
    pub(crate) fn from_hermitian_unchecked(h: HermitianMatrix) -> Self {
        DensityMatrix(h)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(&HermitianMatrix::identity(dim) * (1.0 / dim as f64))
    }

    /// `U diag(x) U†` for a probability vector `x` and unitary `U`.
    pub fn from_spectrum(spectrum: &[f64], unitary: &CMatrix) -> Result<Self> {
        let d = spectrum.len();
        if unitary.nrows() != d || unitary.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: unitary.nrows(),
            });
        }
        let diag = HermitianMatrix::from_real_diagonal(spectrum);
        Self::new(diag.conjugate_by(unitary))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn eig(&self) -> HermitianEigen {
        self.0.eig()
    }

    /// Re-normalizes the trace, keeping Hermiticity exact.
    pub fn renormalized(h: HermitianMatrix) -> Result<Self> {
        let tr = h.trace();
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        Self::new(&h * (1.0 / tr))
    }
}

/// `Tr[rho^2]`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Solves `(L rho + rho L)/2 = drho` for the symmetric logarithmic derivative.
///
/// The solve happens in the eigenbasis of `rho`, where the equation decouples
/// into `L_ij = 2 drho_ij / (x_i + x_j)`. Every eigenvalue of `rho` must
/// exceed `rank_tol`.
pub fn lyapunov_sld(
    rho: &DensityMatrix,
    drho: &HermitianMatrix,
    rank_tol: f64,
) -> Result<HermitianMatrix> {
    let eig = rho.eig();
    sld_in_eigenbasis(&eig, drho, rank_tol)
}

pub(crate) fn check_full_rank(eig: &HermitianEigen, rank_tol: f64) -> Result<()> {
    let min = eig.min();
    if !(min > rank_tol) {
        return Err(Error::RankDeficient {
            eigenvalue: min,
            tol: rank_tol,
        });
    }
    Ok(())
}

pub(crate) fn sld_in_eigenbasis(
    eig: &HermitianEigen,
    drho: &HermitianMatrix,
    rank_tol: f64,
) -> Result<HermitianMatrix> {
    let d = eig.values.len();
    if drho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: drho.dim(),
        });
    }
    check_full_rank(eig, rank_tol)?;
    let v = &eig.vectors;
    let mut a = v.adjoint() * drho.matrix() * v;
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] *= 2.0 / (eig.values[i] + eig.values[j]);
        }
    }
    Ok(HermitianMatrix::hermitize(v * a * v.adjoint()))
}

/// Ordered traceless generators of su(d) with `Tr[S_i S_j] = 2 delta_ij`.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    dim: usize,
    generators: Vec<HermitianMatrix>,
    labels: Vec<String>,
}

impl GeneratorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[HermitianMatrix] {
        &self.generators
    }

    /// Labels `s{j}{k}`, `a{j}{k}` and `d{l}` in basis order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `sum_i c_i S_i`.
    pub fn combine(&self, coeffs: &[f64]) -> Result<HermitianMatrix> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (c, g) in coeffs.iter().zip(&self.generators) {
            m += g.matrix() * C64::new(*c, 0.0);
        }
        Ok(HermitianMatrix::hermitize(m))
    }

    /// Expansion coefficients `Tr[A S_i] / 2` of a Hermitian matrix.
    pub fn coefficients(&self, a: &HermitianMatrix) -> Vec<f64> {
        self.generators
            .iter()
            .map(|g| 0.5 * (a.matrix() * g.matrix()).trace().re)
            .collect()
    }
}

/// Generalized Gell-Mann basis of su(d).
///
/// Order: all symmetric off-diagonal generators, then all antisymmetric
/// off-diagonal generators, each over pairs `(j, k)` with `j < k` in
/// lexicographic order, then the `d - 1` diagonal generators. For `d = 2`
/// this is exactly `(sigma_x, sigma_y, sigma_z)`.
pub fn gellmann_basis(d: usize) -> Result<GeneratorBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| (j + 1..d).map(move |k| (j, k)))
        .collect();
    let mut generators = Vec::with_capacity(d * d - 1);
    let mut labels = Vec::with_capacity(d * d - 1);

    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(d, d);
        m[(j, k)] = C64::new(1.0, 0.0);
        m[(k, j)] = C64::new(1.0, 0.0);
        generators.push(HermitianMatrix(m));
        labels.push(format!("s{j}{k}"));
    }
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(d, d);
        m[(j, k)] = C64::new(0.0, -1.0);
        m[(k, j)] = C64::new(0.0, 1.0);
        generators.push(HermitianMatrix(m));
        labels.push(format!("a{j}{k}"));
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; d];
        for x in diag.iter_mut().take(l) {
            *x = norm;
        }
        diag[l] = -(l as f64) * norm;
        generators.push(HermitianMatrix::from_real_diagonal(&diag));
        labels.push(format!("d{l}"));
    }
    Ok(GeneratorBasis {
        dim: d,
        generators,
        labels,
    })
}

/// Largest `|(U†U - 1)_ij|`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    let id = CMatrix::identity(n, n);
    max_abs(&(prod - id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(d: usize, rng: &mut impl Rng) -> HermitianMatrix {
        let m = CMatrix::from_fn(d, d, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        HermitianMatrix::hermitize(m)
    }

    fn pauli_z() -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn identity_spectrum() {
        let e = HermitianMatrix::identity(3).eig();
        for x in e.values {
            assert!((x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pauli_z_spectrum_is_ascending() {
        let e = pauli_z().eig();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn seeded_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = random_hermitian(4, &mut rng);
        let e = hermitian_eig(a.matrix()).unwrap();
        let err = (e.reconstruct() - a.matrix()).norm();
        assert!(err <= 1e-10 * a.frobenius_norm().max(1.0), "{err}");
        assert!(unitarity_residual(&e.vectors) < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn reconstruction_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 2..=8 {
            for _ in 0..100 {
                let a = random_hermitian(d, &mut rng);
                let e = a.eig();
                let err = (e.reconstruct() - a.matrix()).norm();
                assert!(err <= 1e-10 * a.frobenius_norm().max(1.0));
            }
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(0.3, 0.0);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sld_of_maximally_mixed_state_is_scaled_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 3;
        let drho = random_hermitian(d, &mut rng).traceless_part();
        let rho = DensityMatrix::maximally_mixed(d);
        let l = lyapunov_sld(&rho, &drho, DEFAULT_RANK_TOL).unwrap();
        let expected = &drho * d as f64;
        assert!((l.matrix() - expected.matrix()).norm() < 1e-12);
    }

    #[test]
    fn sld_of_diagonal_qubit() {
        let r = 0.5;
        let rho = DensityMatrix::new(HermitianMatrix::from_real_diagonal(&[
            (1.0 + r) / 2.0,
            (1.0 - r) / 2.0,
        ]))
        .unwrap();
        let drho = &pauli_z() * 0.5;
        let l = lyapunov_sld(&rho, &drho, DEFAULT_RANK_TOL).unwrap();
        assert!((l.matrix()[(0, 0)].re - 2.0 / 3.0).abs() < 1e-14);
        assert!((l.matrix()[(1, 1)].re + 2.0).abs() < 1e-14);
        assert!(l.matrix()[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn sld_residual_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 2..=6 {
            let a = random_hermitian(d, &mut rng);
            let rho_h = HermitianMatrix::hermitize(a.matrix() * a.matrix().adjoint());
            let tr = rho_h.trace();
            let rho = DensityMatrix::new(&rho_h * (1.0 / tr)).unwrap();
            let drho = random_hermitian(d, &mut rng).traceless_part();
            let l = lyapunov_sld(&rho, &drho, DEFAULT_RANK_TOL).unwrap();
            let lhs = (l.matrix() * rho.matrix() + rho.matrix() * l.matrix()) * C64::new(0.5, 0.0);
            let res = (lhs - drho.matrix()).norm();
            assert!(
                res <= 1e-9 * drho.frobenius_norm().max(1.0),
                "d={d} res={res}"
            );
        }
    }

    #[test]
    fn pure_state_is_rank_deficient() {
        let rho = DensityMatrix::new(HermitianMatrix::from_real_diagonal(&[1.0, 0.0])).unwrap();
        let drho = &pauli_z() * 0.5;
        assert!(matches!(
            lyapunov_sld(&rho, &drho, 1e-10),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn qubit_basis_is_pauli() {
        let b = gellmann_basis(2).unwrap();
        let g = b.generators();
        let x = g[0].matrix();
        let y = g[1].matrix();
        let z = g[2].matrix();
        assert_eq!(x[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(y[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], C64::new(0.0, 1.0));
        assert_eq!(z[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], C64::new(-1.0, 0.0));
    }

    #[test]
    fn generator_orthogonality() {
        for d in 2..=6 {
            let b = gellmann_basis(d).unwrap();
            assert_eq!(b.len(), d * d - 1);
            for (i, gi) in b.generators().iter().enumerate() {
                assert!(gi.trace().abs() < 1e-12);
                for (j, gj) in b.generators().iter().enumerate() {
                    let t = (gi.matrix() * gj.matrix()).trace();
                    let expected = if i == j { 2.0 } else { 0.0 };
                    assert!((t.re - expected).abs() < 1e-10 && t.im.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gellmann_rejects_small_dimension() {
        assert_eq!(gellmann_basis(1).unwrap_err(), Error::InvalidDimension(1));
    }

    #[test]
    fn coefficient_round_trip() {
        let b = gellmann_basis(3).unwrap();
        let c: Vec<f64> = (0..8).map(|i| 0.1 * i as f64 - 0.3).collect();
        let m = b.combine(&c).unwrap();
        let back = b.coefficients(&m);
        for (x, y) in c.iter().zip(back) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&DensityMatrix::maximally_mixed(4)) - 0.25).abs() < 1e-15);
        let r: f64 = 0.6;
        let rho = DensityMatrix::new(HermitianMatrix::from_real_diagonal(&[
            (1.0 + r) / 2.0,
            (1.0 - r) / 2.0,
        ]))
        .unwrap();
        assert!((purity(&rho) - 0.68).abs() < 1e-15);
        let pure =
            DensityMatrix::new(HermitianMatrix::from_real_diagonal(&[0.0, 1.0, 0.0])).unwrap();
        assert!((purity(&pure) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_states_are_rejected() {
        let bad_trace = HermitianMatrix::from_real_diagonal(&[0.5, 0.6]);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let negative = HermitianMatrix::from_real_diagonal(&[1.2, -0.2]);
        assert!(DensityMatrix::new(negative).is_err());
    }
}
