//! Parametrized quantum statistical models.
//!
//! A [`ModelFamily`] maps a parameter vector to a density matrix and supplies
//! the derivatives `d rho / d lambda_a`. Families with closed-form derivatives
//! override [`ModelFamily::derivatives`]; everything else falls back to
//! central finite differences. A [`ParamModel`] pins a family to the point at
//! which the local estimation quantities are evaluated.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{
    gellmann_basis, unitarity_residual, CMatrix, DensityMatrix, GeneratorBasis, HermitianMatrix,
    C64,
};

/// Default central-difference step for models without analytic derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Largest `beta * (max - min)` spread of a Gibbs exponent that is accepted.
pub const MAX_GIBBS_SPREAD: f64 = 700.0;

pub trait ModelFamily: Send + Sync {
    fn dim(&self) -> usize;

    fn param_names(&self) -> Vec<String>;

    fn state(&self, params: &[f64]) -> Result<DensityMatrix>;

    fn derivatives(&self, params: &[f64], fd_step: f64) -> Result<Vec<HermitianMatrix>> {
        finite_diff_derivs(|l| self.state(l), params, fd_step)
    }
}

/// Central differences `(rho(l + h e_a) - rho(l - h e_a)) / 2h`, Hermitized and
/// projected onto the traceless subspace.
pub fn finite_diff_derivs<F>(model_eval: F, lambda: &[f64], h: f64) -> Result<Vec<HermitianMatrix>>
where
    F: Fn(&[f64]) -> Result<DensityMatrix>,
{
    if !(h > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference step {h} must be positive"
        )));
    }
    let mut shifted = lambda.to_vec();
    let mut out = Vec::with_capacity(lambda.len());
    for a in 0..lambda.len() {
        shifted[a] = lambda[a] + h;
        let plus = model_eval(&shifted)?;
        shifted[a] = lambda[a] - h;
        let minus = model_eval(&shifted)?;
        shifted[a] = lambda[a];
        let diff = (plus.matrix() - minus.matrix()) * C64::new(0.5 / h, 0.0);
        out.push(HermitianMatrix::hermitize(diff).traceless_part());
    }
    Ok(out)
}

/// A model family pinned to an evaluation point.
#[derive(Clone)]
pub struct ParamModel {
    family: Arc<dyn ModelFamily>,
    point: Vec<f64>,
    fd_step: f64,
}

impl fmt::Debug for ParamModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamModel")
            .field("params", &self.family.param_names())
            .field("point", &self.point)
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

/// State and derivatives of a model at a single point.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub rho: DensityMatrix,
    pub drhos: Vec<HermitianMatrix>,
    pub names: Vec<String>,
}

impl ParamModel {
    pub fn new(family: impl ModelFamily + 'static, point: Vec<f64>) -> Result<Self> {
        Self::from_arc(Arc::new(family), point)
    }

    pub fn from_arc(family: Arc<dyn ModelFamily>, point: Vec<f64>) -> Result<Self> {
        let p = family.param_names().len();
        if point.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: point.len(),
            });
        }
        family.state(&point)?;
        Ok(ParamModel {
            family,
            point,
            fd_step: DEFAULT_FD_STEP,
        })
    }

    /// Model from a closure; derivatives by finite differences.
    pub fn from_fn<F>(dim: usize, names: Vec<String>, eval: F, point: Vec<f64>) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<DensityMatrix> + Send + Sync + 'static,
    {
        Self::new(
            FnFamily {
                dim,
                names,
                eval: Box::new(eval),
            },
            point,
        )
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    /// Same family, different evaluation point.
    pub fn at(&self, point: Vec<f64>) -> Result<Self> {
        Ok(ParamModel {
            fd_step: self.fd_step,
            ..Self::from_arc(self.family.clone(), point)?
        })
    }

    pub fn num_params(&self) -> usize {
        self.point.len()
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn param_names(&self) -> Vec<String> {
        self.family.param_names()
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn eval(&self, params: &[f64]) -> Result<DensityMatrix> {
        self.family.state(params)
    }

    pub fn derivs(&self, params: &[f64]) -> Result<Vec<HermitianMatrix>> {
        self.family.derivatives(params, self.fd_step)
    }

    pub fn state(&self) -> Result<DensityMatrix> {
        self.eval(&self.point)
    }

    pub fn derivatives(&self) -> Result<Vec<HermitianMatrix>> {
        self.derivs(&self.point)
    }

    pub fn local(&self) -> Result<LocalModel> {
        Ok(LocalModel {
            rho: self.state()?,
            drhos: self.derivatives()?,
            names: self.param_names(),
        })
    }
}

struct FnFamily {
    dim: usize,
    names: Vec<String>,
    #[allow(clippy::type_complexity)]
    eval: Box<dyn Fn(&[f64]) -> Result<DensityMatrix> + Send + Sync>,
}

impl ModelFamily for FnFamily {
    fn dim(&self) -> usize {
        self.dim
    }
    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }
    fn state(&self, params: &[f64]) -> Result<DensityMatrix> {
        (self.eval)(params)
    }
}

fn check_len(params: &[f64], expected: usize) -> Result<()> {
    if params.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: params.len(),
        });
    }
    Ok(())
}

/// Qubit in spherical Bloch coordinates `(r, theta, phi)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BlochQubit;

impl BlochQubit {
    fn pauli_combination(v: [f64; 3]) -> HermitianMatrix {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(v[2], 0.0),
                C64::new(v[0], -v[1]),
                C64::new(v[0], v[1]),
                C64::new(-v[2], 0.0),
            ],
        );
        HermitianMatrix::hermitize(m)
    }
}

impl ModelFamily for BlochQubit {
    fn dim(&self) -> usize {
        2
    }

    fn param_names(&self) -> Vec<String> {
        vec!["r".into(), "theta".into(), "phi".into()]
    }

    fn state(&self, params: &[f64]) -> Result<DensityMatrix> {
        check_len(params, 3)?;
        let (r, theta, phi) = (params[0], params[1], params[2]);
        if !(r.abs() <= 1.0) {
            return Err(Error::Domain(format!("Bloch radius {r} outside [0, 1]")));
        }
        let bloch = [
            r * theta.sin() * phi.cos(),
            r * theta.sin() * phi.sin(),
            r * theta.cos(),
        ];
        let m = &(&HermitianMatrix::identity(2) + &Self::pauli_combination(bloch)) * 0.5;
        Ok(DensityMatrix::from_hermitian_unchecked(m))
    }

    fn derivatives(&self, params: &[f64], _fd_step: f64) -> Result<Vec<HermitianMatrix>> {
        check_len(params, 3)?;
        let (r, theta, phi) = (params[0], params[1], params[2]);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let d_r = [st * cp, st * sp, ct];
        let d_theta = [r * ct * cp, r * ct * sp, -r * st];
        let d_phi = [-r * st * sp, r * st * cp, 0.0];
        Ok([d_r, d_theta, d_phi]
            .into_iter()
            .map(|v| &Self::pauli_combination(v) * 0.5)
            .collect())
    }
}

/// Full qubit tomography in spherical Bloch coordinates.
pub fn bloch_qubit(r: f64, theta: f64, phi: f64) -> Result<ParamModel> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!(
            "Bloch radius {r} must lie strictly inside (0, 1)"
        )));
    }
    if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
        return Err(Error::Domain(format!(
            "polar angle {theta} must lie in [0, pi] and phi must be finite"
        )));
    }
    if theta.sin().abs() < 1e-12 {
        return Err(Error::DegenerateChart(format!(
            "theta = {theta} is a pole of the spherical chart; the QFIM is singular in phi"
        )));
    }
    ParamModel::new(BlochQubit, vec![r, theta, phi])
}

/// Mixture (generalized Bloch) coordinates `rho = (1 + sum_i g_i S_i) / d`.
#[derive(Debug, Clone)]
pub struct MixtureCoordinates {
    basis: Arc<GeneratorBasis>,
}

impl MixtureCoordinates {
    pub fn new(basis: GeneratorBasis) -> Self {
        MixtureCoordinates {
            basis: Arc::new(basis),
        }
    }

    pub fn basis(&self) -> &GeneratorBasis {
        &self.basis
    }
}

impl ModelFamily for MixtureCoordinates {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn param_names(&self) -> Vec<String> {
        self.basis
            .labels()
            .iter()
            .map(|l| format!("gamma_{l}"))
            .collect()
    }

    fn state(&self, params: &[f64]) -> Result<DensityMatrix> {
        let d = self.basis.dim();
        let sum = self.basis.combine(params)?;
        let m = &(&HermitianMatrix::identity(d) + &sum) * (1.0 / d as f64);
        let min = m.eig().min();
        if !(min > 0.0) {
            return Err(Error::Domain(format!(
                "mixture coordinates give a state with eigenvalue {min:e}"
            )));
        }
        Ok(DensityMatrix::from_hermitian_unchecked(m))
    }

    fn derivatives(&self, params: &[f64], _fd_step: f64) -> Result<Vec<HermitianMatrix>> {
        check_len(params, self.basis.len())?;
        let inv_d = 1.0 / self.basis.dim() as f64;
        Ok(self.basis.generators().iter().map(|g| g * inv_d).collect())
    }
}

/// Mixture coordinates `g_i = (d/2) Tr[rho S_i]` of a state.
pub fn mixture_coordinates(rho: &DensityMatrix, basis: &GeneratorBasis) -> Vec<f64> {
    let half_d = 0.5 * basis.dim() as f64;
    basis
        .generators()
        .iter()
        .map(|g| half_d * (rho.matrix() * g.matrix()).trace().re)
        .collect()
}

/// Full qudit tomography in mixture coordinates, evaluated at `gamma`.
pub fn qudit_mixture(gamma: &[f64], basis: &GeneratorBasis) -> Result<ParamModel> {
    check_len(gamma, basis.len())?;
    ParamModel::new(MixtureCoordinates::new(basis.clone()), gamma.to_vec())
}

/// Gibbs state `exp(-beta H) / Tr[exp(-beta H)]` of a Hermitian `H`.
pub fn gibbs_state(beta: f64, h: &HermitianMatrix) -> Result<DensityMatrix> {
    let eig = h.eig();
    let spread = beta * (eig.max() - eig.min());
    if !(spread.abs() <= MAX_GIBBS_SPREAD) {
        return Err(Error::NumericalOverflow(format!(
            "beta * spectral spread = {spread} exceeds {MAX_GIBBS_SPREAD}"
        )));
    }
    let shift = if beta >= 0.0 { eig.min() } else { eig.max() };
    let weights: Vec<f64> = eig
        .values
        .iter()
        .map(|x| (-beta * (x - shift)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let m = eig.apply(|x| C64::new((-beta * (x - shift)).exp() / z, 0.0));
    Ok(DensityMatrix::from_hermitian_unchecked(
        HermitianMatrix::hermitize(m),
    ))
}

/// Exponential coordinates `H = sum_j l_j S_j` at fixed inverse temperature.
#[derive(Debug, Clone)]
pub struct GibbsSpec {
    pub beta: f64,
    pub lambda: Vec<f64>,
    pub basis: GeneratorBasis,
}

impl GibbsSpec {
    pub fn new(beta: f64, lambda: Vec<f64>, basis: GeneratorBasis) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("beta = {beta} must be positive")));
        }
        check_len(&lambda, basis.len())?;
        if let Some(bad) = lambda.iter().find(|l| !(l.abs() <= 1.0)) {
            return Err(Error::Domain(format!(
                "exponential coordinate {bad} outside [-1, 1]"
            )));
        }
        Ok(GibbsSpec {
            beta,
            lambda,
            basis,
        })
    }

    /// Coordinates of a diagonal Hamiltonian `diag(deltas)` (trace removed).
    pub fn diagonal(beta: f64, deltas: &[f64]) -> Result<Self> {
        let basis = gellmann_basis(deltas.len())?;
        if let Some(bad) = deltas.iter().find(|x| !(x.abs() <= 1.0)) {
            return Err(Error::Domain(format!("energy {bad} outside [-1, 1]")));
        }
        let h = HermitianMatrix::from_real_diagonal(deltas);
        let lambda = basis.coefficients(&h);
        Self::new(beta, lambda, basis)
    }
}

/// Exponential-coordinate family; derivatives by finite differences.
#[derive(Debug, Clone)]
pub struct GibbsFamily {
    beta: f64,
    basis: Arc<GeneratorBasis>,
}

impl GibbsFamily {
    pub fn new(beta: f64, basis: GeneratorBasis) -> Self {
        GibbsFamily {
            beta,
            basis: Arc::new(basis),
        }
    }
}

impl ModelFamily for GibbsFamily {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn param_names(&self) -> Vec<String> {
        self.basis
            .labels()
            .iter()
            .map(|l| format!("lambda_{l}"))
            .collect()
    }

    fn state(&self, params: &[f64]) -> Result<DensityMatrix> {
        let h = self.basis.combine(params)?;
        gibbs_state(self.beta, &h)
    }
}

/// Full tomography in exponential coordinates at `spec.lambda`.
pub fn gibbs_model(spec: &GibbsSpec) -> Result<ParamModel> {
    ParamModel::new(
        GibbsFamily::new(spec.beta, spec.basis.clone()),
        spec.lambda.clone(),
    )
}

/// `rho = U diag(x) U†` together with `beta * Delta_M = ln(max x / min x)`.
pub fn from_spectrum_unitary(x: &[f64], unitary: &CMatrix) -> Result<(DensityMatrix, f64)> {
    if x.len() < 2 {
        return Err(Error::InvalidDimension(x.len()));
    }
    if let Some(bad) = x.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!(
            "spectrum entry {bad} is not positive"
        )));
    }
    let total: f64 = x.iter().sum();
    if (total - 1.0).abs() > 1e-12 * x.len() as f64 {
        return Err(Error::Domain(format!(
            "spectrum sums to {total}, expected 1"
        )));
    }
    if unitary.nrows() != x.len() || unitary.ncols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: unitary.nrows(),
        });
    }
    let res = unitarity_residual(unitary);
    if res > 1e-10 {
        return Err(Error::Domain(format!(
            "matrix is not unitary (residual {res:e})"
        )));
    }
    let rho = DensityMatrix::from_spectrum(x, unitary)?;
    Ok((rho, beta_delta_m(x)))
}

/// `ln(max x / min x)` of a strictly positive spectrum.
pub fn beta_delta_m(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    (max / min).ln()
}
