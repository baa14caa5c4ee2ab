//! Local multiparameter estimation quantities.
//!
//! From a state `rho` and its derivatives this module builds the SLD
//! operators, the SLD quantum Fisher information matrix `Q`, the Uhlmann
//! curvature `U`, and the spectrum of the incompatibility matrix
//! `I = i Q^{-1} U`. The asymptotic incompatibility (AI) is the largest
//! eigenvalue of `I`; it is invariant under reparametrization and lies in
//! `[0, 1]`.
//!
//! Both `Q` and `U` come out of one Hermitian matrix of traces,
//! `M_ab = Tr[rho L_a L_b]`: `Q = Re M` and `U = Im M`.
//!
//! The spectrum of `I` is computed from the Hermitian matrix
//! `i Q^{-1/2} U Q^{-1/2}`, which is similar to `I`, so the eigenvalues are
//! real by construction and come in `+-` pairs plus zeros.

use nalgebra::SymmetricEigen;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{
    check_full_rank, max_abs, sld_in_eigenbasis, symmetric_eig, CMatrix, DensityMatrix,
    HermitianEigen, HermitianMatrix, RMatrix, C64, DEFAULT_RANK_TOL,
};
use crate::model::{LocalModel, ParamModel, DEFAULT_FD_STEP};

/// Default strict-positivity threshold when counting eigenvalues of `I`.
pub const DEFAULT_EIG_TOL: f64 = 1e-8;

/// Outcomes with smaller probability are dropped from the classical Fisher sum.
pub const CFIM_PROB_FLOOR: f64 = 1e-12;

/// `Q` is treated as singular when `min eig <= SINGULAR_RTOL * max eig`.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Numerical tolerances shared by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Minimum eigenvalue of a state accepted by the SLD solver.
    pub rank_tol: f64,
    /// Threshold for counting strictly positive eigenvalues of `I`.
    pub eig_tol: f64,
    /// Finite-difference step for models without analytic derivatives.
    pub fd_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_tol: DEFAULT_RANK_TOL,
            eig_tol: DEFAULT_EIG_TOL,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rank_tol", self.rank_tol),
            ("eig_tol", self.eig_tol),
            ("fd_step", self.fd_step),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// SLD operators `L_a` solving `d_a rho = (L_a rho + rho L_a) / 2`.
pub fn sld_set(
    rho: &DensityMatrix,
    drhos: &[HermitianMatrix],
    rank_tol: f64,
) -> Result<Vec<HermitianMatrix>> {
    let eig = rho.eig();
    check_full_rank(&eig, rank_tol)?;
    drhos
        .iter()
        .map(|d| sld_in_eigenbasis(&eig, d, rank_tol))
        .collect()
}

/// `M_ab = Tr[rho L_a L_b]`.
fn trace_products(rho: &DensityMatrix, slds: &[HermitianMatrix]) -> CMatrix {
    let p = slds.len();
    let rho_l: Vec<CMatrix> = slds.iter().map(|l| rho.matrix() * l.matrix()).collect();
    let l_t: Vec<CMatrix> = slds.iter().map(|l| l.matrix().transpose()).collect();
    CMatrix::from_fn(p, p, |a, b| rho_l[a].component_mul(&l_t[b]).sum())
}

fn symmetric_part(m: RMatrix) -> RMatrix {
    (&m + m.transpose()) * 0.5
}

fn antisymmetric_part(m: RMatrix) -> RMatrix {
    (&m - m.transpose()) * 0.5
}

/// SLD quantum Fisher information matrix `Q_ab = Tr[rho {L_a, L_b}] / 2`.
pub fn qfim(rho: &DensityMatrix, slds: &[HermitianMatrix]) -> RMatrix {
    symmetric_part(trace_products(rho, slds).map(|z| z.re))
}

/// Uhlmann curvature `U_ab = -(i/2) Tr[rho [L_a, L_b]]`.
pub fn uhlmann(rho: &DensityMatrix, slds: &[HermitianMatrix]) -> RMatrix {
    antisymmetric_part(trace_products(rho, slds).map(|z| z.im))
}

/// `(Q, U)` straight from state derivatives, in the eigenbasis of `rho`.
pub fn sld_geometry(
    rho: &DensityMatrix,
    drhos: &[HermitianMatrix],
    rank_tol: f64,
) -> Result<(RMatrix, RMatrix)> {
    let eig = rho.eig();
    check_full_rank(&eig, rank_tol)?;
    Ok(geometry_from_eigen(&eig, drhos, |_, _| true))
}

/// `(Q, U)` for states with numerically vanishing eigenvalues.
///
/// SLD matrix elements between eigenvectors with `x_i + x_j <= support_tol`
/// are set to zero instead of failing. Intended for truncated
/// infinite-dimensional states whose tail eigenvalues underflow; their
/// contribution to `Q` and `U` is bounded by the discarded weight.
pub fn geometry_on_support(
    rho: &DensityMatrix,
    drhos: &[HermitianMatrix],
    support_tol: f64,
) -> (RMatrix, RMatrix) {
    let eig = rho.eig();
    let x = eig.values.clone();
    geometry_from_eigen(&eig, drhos, |i, j| x[i] + x[j] > support_tol)
}

fn geometry_from_eigen(
    eig: &HermitianEigen,
    drhos: &[HermitianMatrix],
    keep: impl Fn(usize, usize) -> bool,
) -> (RMatrix, RMatrix) {
    let d = eig.values.len();
    let x = &eig.values;
    let v = &eig.vectors;
    let slds: Vec<CMatrix> = drhos
        .iter()
        .map(|dr| {
            let mut a = v.adjoint() * dr.matrix() * v;
            for i in 0..d {
                for j in 0..d {
                    a[(i, j)] = if keep(i, j) {
                        a[(i, j)] * (2.0 / (x[i] + x[j]))
                    } else {
                        C64::new(0.0, 0.0)
                    };
                }
            }
            a
        })
        .collect();
    let weighted: Vec<CMatrix> = slds
        .iter()
        .map(|l| {
            let mut w = l.clone();
            for i in 0..d {
                for j in 0..d {
                    w[(i, j)] *= x[i];
                }
            }
            w
        })
        .collect();
    let p = drhos.len();
    let m = CMatrix::from_fn(p, p, |a, b| {
        weighted[a].component_mul(&slds[b].transpose()).sum()
    });
    (
        symmetric_part(m.map(|z| z.re)),
        antisymmetric_part(m.map(|z| z.im)),
    )
}

fn check_square_pair(q: &RMatrix, u: &RMatrix) -> Result<usize> {
    let p = q.nrows();
    for m in [q, u] {
        if m.nrows() != p || m.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: m.ncols(),
            });
        }
    }
    Ok(p)
}

/// Eigenvalues and eigenvectors of a positive-definite `Q`, or `SingularQfim`.
fn spd_eig(q: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    let (w, v) = symmetric_eig(q);
    let max = w.last().copied().unwrap_or(0.0);
    let min = w.first().copied().unwrap_or(0.0);
    if !(max > 0.0) || !(min > SINGULAR_RTOL * max) {
        return Err(Error::SingularQfim {
            min_eigenvalue: min,
        });
    }
    Ok((w, v))
}

/// Eigenvalues of `I = i Q^{-1} U`, descending.
pub fn incompat_spectrum(q: &RMatrix, u: &RMatrix) -> Result<Vec<f64>> {
    let p = check_square_pair(q, u)?;
    if p == 0 {
        return Ok(Vec::new());
    }
    let (w, v) = spd_eig(q)?;
    let scale = RMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        p,
        w.iter().map(|x| 1.0 / x.sqrt()),
    ));
    let q_inv_sqrt = &v * scale * v.transpose();
    let a = antisymmetric_part(&q_inv_sqrt * u * &q_inv_sqrt);
    let h = a.map(|x| C64::new(0.0, x));
    let eig = SymmetricEigen::new(h);
    let mut s: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// AI measure: the largest eigenvalue of `i Q^{-1} U`.
pub fn ai_measure(q: &RMatrix, u: &RMatrix) -> Result<f64> {
    let s = incompat_spectrum(q, u)?;
    Ok(s.first().copied().unwrap_or(0.0).max(0.0))
}

/// Number of eigenvalues strictly above `eig_tol`.
pub fn positive_count(spectrum: &[f64], eig_tol: f64) -> usize {
    spectrum.iter().filter(|&&s| s > eig_tol).count()
}

/// Upper bound `p - delta` on the number of compatible parameters.
pub fn compat_bound(spectrum: &[f64], p: usize, eig_tol: f64) -> usize {
    p.saturating_sub(positive_count(spectrum, eig_tol))
}

/// Everything the pipeline derives from `(Q, U)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub q: RMatrix,
    pub u: RMatrix,
    /// Eigenvalues of `i Q^{-1} U`, descending.
    pub i_spectrum: Vec<f64>,
    pub r: f64,
    pub delta: usize,
    pub compat_bound: usize,
}

impl EstimationReport {
    pub fn from_matrices(q: RMatrix, u: RMatrix, eig_tol: f64) -> Result<Self> {
        let i_spectrum = incompat_spectrum(&q, &u)?;
        let p = q.nrows();
        let r = i_spectrum.first().copied().unwrap_or(0.0).max(0.0);
        let delta = positive_count(&i_spectrum, eig_tol);
        Ok(EstimationReport {
            q,
            u,
            i_spectrum,
            r,
            delta,
            compat_bound: p - delta,
        })
    }

    pub fn from_state(
        rho: &DensityMatrix,
        drhos: &[HermitianMatrix],
        tol: &Tolerances,
    ) -> Result<Self> {
        let (q, u) = sld_geometry(rho, drhos, tol.rank_tol)?;
        Self::from_matrices(q, u, tol.eig_tol)
    }

    pub fn from_local(local: &LocalModel, tol: &Tolerances) -> Result<Self> {
        Self::from_state(&local.rho, &local.drhos, tol)
    }

    pub fn from_model(model: &ParamModel, tol: &Tolerances) -> Result<Self> {
        let local = model.clone().with_fd_step(tol.fd_step).local()?;
        Self::from_local(&local, tol)
    }

    pub fn num_params(&self) -> usize {
        self.q.nrows()
    }

    /// Report of the submodel keeping only the parameters in `subset`.
    ///
    /// Fixing parameters leaves the remaining SLDs untouched, so the submodel
    /// matrices are principal submatrices of `Q` and `U`.
    pub fn submodel(&self, subset: &[usize], eig_tol: f64) -> Result<Self> {
        validate_subset(subset, self.num_params())?;
        let q = principal_submatrix(&self.q, subset);
        let u = principal_submatrix(&self.u, subset);
        Self::from_matrices(q, u, eig_tol)
    }

    /// `R`, `r_{j+1}` and `R_full` for the submodel on `subset`.
    pub fn submodel_bounds(&self, subset: &[usize], eig_tol: f64) -> Result<SubmodelBounds> {
        let sub = self.submodel(subset, eig_tol)?;
        let j = self.num_params() - subset.len();
        Ok(SubmodelBounds {
            r_sub: sub.r,
            lower: self.i_spectrum[j],
            upper: self.r,
            removed: j,
        })
    }
}

fn matrix_rows(m: &RMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl Serialize for EstimationReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("EstimationReport", 6)?;
        s.serialize_field("q", &matrix_rows(&self.q))?;
        s.serialize_field("u", &matrix_rows(&self.u))?;
        s.serialize_field("spectrum", &self.i_spectrum)?;
        s.serialize_field("r", &self.r)?;
        s.serialize_field("delta", &self.delta)?;
        s.serialize_field("compat_bound", &self.compat_bound)?;
        s.end()
    }
}

/// Interlacing bracket `r_{j+1} <= R_sub <= R_full` for a `(p - j)`-parameter submodel.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SubmodelBounds {
    pub r_sub: f64,
    /// `r_{j+1}`: the `(j+1)`-th largest eigenvalue of the full `I`.
    pub lower: f64,
    pub upper: f64,
    /// Number of fixed parameters `j`.
    pub removed: usize,
}

impl SubmodelBounds {
    pub fn holds(&self, tol: f64) -> bool {
        self.lower - tol <= self.r_sub && self.r_sub <= self.upper + tol
    }
}

fn validate_subset(subset: &[usize], p: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::InvalidSubset("subset is empty".into()));
    }
    let mut seen = vec![false; p];
    for &i in subset {
        if i >= p {
            return Err(Error::InvalidSubset(format!(
                "index {i} out of range for {p} parameters"
            )));
        }
        if seen[i] {
            return Err(Error::InvalidSubset(format!("index {i} repeated")));
        }
        seen[i] = true;
    }
    Ok(())
}

pub fn principal_submatrix(m: &RMatrix, subset: &[usize]) -> RMatrix {
    RMatrix::from_fn(subset.len(), subset.len(), |a, b| m[(subset[a], subset[b])])
}

/// Report for the submodel on `subset` of the model `(rho, drhos)`.
pub fn submodel_report(
    rho: &DensityMatrix,
    drhos: &[HermitianMatrix],
    subset: &[usize],
    tol: &Tolerances,
) -> Result<EstimationReport> {
    validate_subset(subset, drhos.len())?;
    let picked: Vec<HermitianMatrix> = subset.iter().map(|&i| drhos[i].clone()).collect();
    EstimationReport::from_state(rho, &picked, tol)
}

/// Positive-pair count and compatible-parameter bound for full tomography of
/// a `d`-level system whose Hamiltonian has the given degeneracies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegeneracyCount {
    pub delta: usize,
    pub compat_bound: usize,
}

pub fn degenerate_delta(d: usize, multiplicities: &[usize]) -> Result<DegeneracyCount> {
    let total: usize = multiplicities.iter().sum();
    if total != d || multiplicities.contains(&0) {
        return Err(Error::Domain(format!(
            "multiplicities {multiplicities:?} do not partition dimension {d}"
        )));
    }
    let degenerate_pairs: usize = multiplicities.iter().map(|&n| n * (n - 1) / 2).sum();
    let delta = d * (d - 1) / 2 - degenerate_pairs;
    Ok(DegeneracyCount {
        delta,
        compat_bound: (d * d - 1) - delta,
    })
}

/// Multiplicities of a spectrum, clustering values closer than `tol`.
pub fn spectrum_multiplicities(x: &[f64], tol: f64) -> Vec<usize> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<usize> = Vec::new();
    let mut last = f64::NAN;
    for v in sorted {
        if out.is_empty() || (v - last).abs() > tol {
            out.push(1);
        } else {
            *out.last_mut().unwrap() += 1;
        }
        last = v;
    }
    out
}

/// Real symmetric positive-definite weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(RMatrix);

impl WeightMatrix {
    pub fn new(w: RMatrix) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::Domain("weight matrix is not square".into()));
        }
        let asym = (&w - w.transpose()).amax();
        if asym > 1e-12 * w.amax().max(1.0) {
            return Err(Error::Domain(format!(
                "weight matrix is not symmetric ({asym:e})"
            )));
        }
        let (vals, _) = symmetric_eig(&w);
        if !(vals.first().copied().unwrap_or(0.0) > 0.0) {
            return Err(Error::Domain(
                "weight matrix is not positive definite".into(),
            ));
        }
        Ok(WeightMatrix(symmetric_part(w)))
    }

    pub fn identity(p: usize) -> Self {
        WeightMatrix(RMatrix::identity(p, p))
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.0
    }
}

/// Inverse of a positive-definite `Q`.
pub fn qfim_inverse(q: &RMatrix) -> Result<RMatrix> {
    let (w, v) = spd_eig(q)?;
    let p = w.len();
    let inv = RMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        p,
        w.iter().map(|x| 1.0 / x),
    ));
    Ok(symmetric_part(&v * inv * v.transpose()))
}

/// Scalar SLD bound `Tr[W Q^{-1}]`.
pub fn scalar_sld_bound(q: &RMatrix, w: &WeightMatrix) -> Result<f64> {
    if w.matrix().nrows() != q.nrows() {
        return Err(Error::DimensionMismatch {
            expected: q.nrows(),
            got: w.matrix().nrows(),
        });
    }
    let inv = qfim_inverse(q)?;
    Ok((w.matrix() * inv).trace())
}

/// Range `[C_S, (1 + R) C_S]` that contains the Holevo bound.
pub fn holevo_range(cs: f64, r: f64) -> (f64, f64) {
    debug_assert!(cs > 0.0 && (-1e-9..=1.0 + 1e-9).contains(&r));
    (cs, (1.0 + r) * cs)
}

/// `(B Q Bᵀ, B U Bᵀ)` for the reparametrization matrix `B_ab = d l_b / d g_a`.
pub fn reparametrize(q: &RMatrix, u: &RMatrix, b: &RMatrix) -> Result<(RMatrix, RMatrix)> {
    let p = check_square_pair(q, u)?;
    if b.nrows() != p || b.ncols() != p {
        return Err(Error::InvalidReparametrization);
    }
    let sv = b.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if !(max > 0.0) || !(min > 1e-12 * max) {
        return Err(Error::InvalidReparametrization);
    }
    let bt = b.transpose();
    Ok((symmetric_part(b * q * &bt), antisymmetric_part(b * u * &bt)))
}

/// Classical Fisher information matrix of an outcome distribution `p(k | l)`.
///
/// Derivatives of the probabilities are central differences with step `h`;
/// outcomes with `p < CFIM_PROB_FLOOR` at `l` are dropped from the sum.
pub fn cfim<F>(probabilities: F, lambda: &[f64], h: f64) -> Result<RMatrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(h > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference step {h} must be positive"
        )));
    }
    let check = |p: Vec<f64>| -> Result<Vec<f64>> {
        if let Some(bad) = p.iter().find(|&&x| x < -CFIM_PROB_FLOOR || !x.is_finite()) {
            return Err(Error::InvalidPovm(format!("negative probability {bad:e}")));
        }
        Ok(p)
    };
    let p0 = check(probabilities(lambda)?)?;
    let n = lambda.len();
    let mut shifted = lambda.to_vec();
    let mut grads = Vec::with_capacity(n);
    for a in 0..n {
        shifted[a] = lambda[a] + h;
        let plus = check(probabilities(&shifted)?)?;
        shifted[a] = lambda[a] - h;
        let minus = check(probabilities(&shifted)?)?;
        shifted[a] = lambda[a];
        if plus.len() != p0.len() || minus.len() != p0.len() {
            return Err(Error::InvalidPovm(
                "outcome count changed with parameters".into(),
            ));
        }
        grads.push(
            plus.iter()
                .zip(&minus)
                .map(|(pp, pm)| (pp - pm) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let mut f = RMatrix::zeros(n, n);
    for (k, &pk) in p0.iter().enumerate() {
        if pk < CFIM_PROB_FLOOR {
            continue;
        }
        for a in 0..n {
            for b in 0..n {
                f[(a, b)] += grads[a][k] * grads[b][k] / pk;
            }
        }
    }
    Ok(symmetric_part(f))
}

/// Born-rule probabilities `Tr[rho P_k]` for a POVM.
pub fn born_probabilities(rho: &DensityMatrix, povm: &[HermitianMatrix]) -> Result<Vec<f64>> {
    let d = rho.dim();
    let mut total = CMatrix::zeros(d, d);
    for e in povm {
        if e.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: e.dim(),
            });
        }
        total += e.matrix();
    }
    let dev = max_abs(&(total - CMatrix::identity(d, d)));
    if dev > 1e-10 {
        return Err(Error::InvalidPovm(format!(
            "elements do not sum to the identity (deviation {dev:e})"
        )));
    }
    let probs: Vec<f64> = povm
        .iter()
        .map(|e| (rho.matrix() * e.matrix()).trace().re)
        .collect();
    if let Some(bad) = probs.iter().find(|&&p| p < -CFIM_PROB_FLOOR) {
        return Err(Error::InvalidPovm(format!("negative probability {bad:e}")));
    }
    Ok(probs)
}

/// Rank-one projectors onto the columns of a unitary matrix.
pub fn projective_measurement(basis: &CMatrix) -> Result<Vec<HermitianMatrix>> {
    let res = crate::linalg::unitarity_residual(basis);
    if res > 1e-10 {
        return Err(Error::InvalidPovm(format!(
            "basis is not orthonormal ({res:e})"
        )));
    }
    Ok(basis
        .column_iter()
        .map(|c| HermitianMatrix::hermitize(c * c.adjoint()))
        .collect())
}
