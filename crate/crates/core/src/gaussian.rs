//! Single-mode Gaussian models.
//!
//! Conventions: quadratures `q = (a + a†)/√2`, `p = i(a† − a)/√2`,
//! symplectic form `Ω = [[0, 1], [−1, 0]]`, vacuum covariance `σ = 𝟙`,
//! purity `μ = 1/√det σ`.
//!
//! The five-parameter family is `ρ = D(α) S(ξ) ν_N S(ξ)† D(α)†` with
//! parameters `(Re α, Im α, r, φ, N)`. Its first moments are
//! `d = √2 (Re α, Im α)` and its covariance is `σ = s₁σ_x + s₂𝟙 + s₃σ_z` with
//! `s₁ = −(2N+1) sinh 2r sin φ`, `s₂ = (2N+1) cosh 2r`, `s₃ = (2N+1) sinh 2r cos φ`.
//! In Fock space these moments belong to `S = exp(½ζ a†² − ½ζ* a²)` with
//! `ζ = r e^{−iφ}`.

use nalgebra::{Matrix2, Vector2};
use serde::{Serialize, Serializer};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::estimation::{geometry_on_support, EstimationReport, Tolerances};
use crate::linalg::{CMatrix, DensityMatrix, HermitianMatrix, RMatrix, C64};

/// Central-difference step used on Gaussian moments.
pub const GAUSSIAN_FD_STEP: f64 = 1e-6;

/// States with `μ ≥ 1 − PURE_MU_TOL` are treated as pure.
pub const PURE_MU_TOL: f64 = 1e-9;

/// A pure family is accepted when every `|∂μ|` stays below this.
pub const PURE_DMU_TOL: f64 = 1e-7;

/// Largest accepted trace deficit of a truncated Fock state.
pub const FOCK_TRACE_TOL: f64 = 1e-8;

/// Extra Fock levels used while exponentiating, before truncating to `n_max`.
pub const FOCK_PADDING: usize = 30;

/// Eigenvalue-pair cutoff for SLDs of truncated Fock states.
pub const FOCK_SUPPORT_TOL: f64 = 1e-12;

/// Below this squeezing the polar chart is replaced by the Cartesian one.
pub const POLAR_CHART_MIN_R: f64 = 1e-4;

pub const POLAR_NAMES: [&str; 5] = ["re_alpha", "im_alpha", "r", "phi", "n"];
pub const CARTESIAN_NAMES: [&str; 5] = ["re_alpha", "im_alpha", "x", "y", "n"];

fn symplectic_form() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// First and second moments of a single-mode Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub d: Vector2<f64>,
    pub sigma: Matrix2<f64>,
}

impl GaussianState {
    /// Checks symmetry and `σ + iΩ ⪰ 0`, i.e. `σ ≻ 0` and `det σ ≥ 1`.
    pub fn new(d: Vector2<f64>, sigma: Matrix2<f64>) -> Result<Self> {
        if d.iter().chain(sigma.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidState("non-finite Gaussian moments".into()));
        }
        let asym = (sigma[(0, 1)] - sigma[(1, 0)]).abs();
        if asym > 1e-12 * sigma.amax().max(1.0) {
            return Err(Error::InvalidState(format!(
                "covariance is not symmetric ({asym:e})"
            )));
        }
        let det = sigma.determinant();
        if !(sigma[(0, 0)] > 0.0) || det < 1.0 - 1e-10 {
            return Err(Error::InvalidState(format!(
                "covariance violates the uncertainty principle (det = {det})"
            )));
        }
        Ok(GaussianState { d, sigma })
    }

    pub fn vacuum() -> Self {
        GaussianState {
            d: Vector2::zeros(),
            sigma: Matrix2::identity(),
        }
    }

    pub fn purity(&self) -> f64 {
        1.0 / self.sigma.determinant().sqrt()
    }

    /// Recovers `(α, r, φ, N)` from a Williamson decomposition of `σ`.
    pub fn to_params(&self) -> GaussianParams {
        let k = self.sigma.determinant().max(1.0).sqrt();
        let sn = self.sigma / k;
        let c = 0.5 * (sn[(0, 0)] + sn[(1, 1)]);
        let r = 0.5 * c.max(1.0).acosh();
        let phi = if r > 0.0 {
            (-sn[(0, 1)])
                .atan2(0.5 * (sn[(0, 0)] - sn[(1, 1)]))
                .rem_euclid(2.0 * PI)
        } else {
            0.0
        };
        GaussianParams {
            re_alpha: self.d[0] / SQRT_2,
            im_alpha: self.d[1] / SQRT_2,
            r,
            phi,
            n_thermal: 0.5 * (k - 1.0),
        }
    }
}

#[derive(Serialize)]
struct StateRepr {
    d: [f64; 2],
    sigma: [[f64; 2]; 2],
}

impl Serialize for GaussianState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let s = &self.sigma;
        StateRepr {
            d: [self.d[0], self.d[1]],
            sigma: [[s[(0, 0)], s[(0, 1)]], [s[(1, 0)], s[(1, 1)]]],
        }
        .serialize(serializer)
    }
}

/// Parameters `(Re α, Im α, r, φ, N)` of a displaced squeezed thermal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianParams {
    pub re_alpha: f64,
    pub im_alpha: f64,
    pub r: f64,
    pub phi: f64,
    pub n_thermal: f64,
}

impl GaussianParams {
    pub fn new(re_alpha: f64, im_alpha: f64, r: f64, phi: f64, n_thermal: f64) -> Result<Self> {
        let p = GaussianParams {
            re_alpha,
            im_alpha,
            r,
            phi,
            n_thermal,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_vec().iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("Gaussian parameters must be finite".into()));
        }
        if self.r < 0.0 {
            return Err(Error::Domain(format!(
                "squeezing r = {} must be nonnegative",
                self.r
            )));
        }
        if self.n_thermal < 0.0 {
            return Err(Error::Domain(format!(
                "thermal photon number N = {} must be nonnegative",
                self.n_thermal
            )));
        }
        Ok(())
    }

    pub fn from_slice(l: &[f64]) -> Result<Self> {
        if l.len() != 5 {
            return Err(Error::DimensionMismatch {
                expected: 5,
                got: l.len(),
            });
        }
        Self::new(l[0], l[1], l[2], l[3], l[4])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.re_alpha,
            self.im_alpha,
            self.r,
            self.phi,
            self.n_thermal,
        ]
    }

    /// Coordinates `(Re α, Im α, r cos φ, r sin φ, N)`.
    pub fn to_cartesian(&self) -> Vec<f64> {
        vec![
            self.re_alpha,
            self.im_alpha,
            self.r * self.phi.cos(),
            self.r * self.phi.sin(),
            self.n_thermal,
        ]
    }

    /// `1/(2N+1)`.
    pub fn purity(&self) -> f64 {
        1.0 / (2.0 * self.n_thermal + 1.0)
    }

    /// `ζ = r e^{−iφ}`, the Fock-space squeezing argument matching [`moments`].
    pub fn zeta(&self) -> C64 {
        C64::from_polar(self.r, -self.phi)
    }
}

/// Moments `(d, σ)` of a five-parameter state.
pub fn moments(p: &GaussianParams) -> GaussianState {
    let k = 2.0 * p.n_thermal + 1.0;
    let (sh, ch) = ((2.0 * p.r).sinh(), (2.0 * p.r).cosh());
    let s1 = -k * sh * p.phi.sin();
    let s2 = k * ch;
    let s3 = k * sh * p.phi.cos();
    GaussianState {
        d: Vector2::new(SQRT_2 * p.re_alpha, SQRT_2 * p.im_alpha),
        sigma: Matrix2::new(s2 + s3, s1, s1, s2 - s3),
    }
}

/// `sinh(2ρ)/ρ`, continuous at 0.
fn sinh2_over(rho: f64) -> f64 {
    if rho < 1e-8 {
        2.0 + 4.0 * rho * rho / 3.0
    } else {
        (2.0 * rho).sinh() / rho
    }
}

/// Moments in the chart `(Re α, Im α, x, y, N)` with `x + iy = r e^{iφ}`.
///
/// Smooth at `r = 0`, where the polar chart degenerates.
pub fn moments_cartesian(l: &[f64]) -> Result<GaussianState> {
    if l.len() != 5 {
        return Err(Error::DimensionMismatch {
            expected: 5,
            got: l.len(),
        });
    }
    let (x, y, n) = (l[2], l[3], l[4]);
    if n < 0.0 {
        return Err(Error::Domain(format!(
            "thermal photon number N = {n} must be nonnegative"
        )));
    }
    let k = 2.0 * n + 1.0;
    let rho = x.hypot(y);
    let f = sinh2_over(rho);
    let s1 = -k * f * y;
    let s2 = k * (2.0 * rho).cosh();
    let s3 = k * f * x;
    Ok(GaussianState {
        d: Vector2::new(SQRT_2 * l[0], SQRT_2 * l[1]),
        sigma: Matrix2::new(s2 + s3, s1, s1, s2 - s3),
    })
}

/// Moments in the polar chart `(Re α, Im α, r, φ, N)`.
///
/// Smooth across `r = 0`, so finite differences may step to negative `r`,
/// which describes the same state as `(−r, φ + π)`.
pub fn moments_polar(l: &[f64]) -> Result<GaussianState> {
    if l.len() != 5 {
        return Err(Error::DimensionMismatch {
            expected: 5,
            got: l.len(),
        });
    }
    if !(l[4] >= 0.0) {
        return Err(Error::Domain(format!(
            "thermal photon number N = {} must be nonnegative",
            l[4]
        )));
    }
    Ok(moments(&GaussianParams {
        re_alpha: l[0],
        im_alpha: l[1],
        r: l[2],
        phi: l[3],
        n_thermal: l[4],
    }))
}

/// Coordinate chart of the five-parameter family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Polar,
    Cartesian,
}

impl Chart {
    /// Polar unless the squeezing is too small for it.
    pub fn for_params(p: &GaussianParams) -> Self {
        if p.r < POLAR_CHART_MIN_R {
            Chart::Cartesian
        } else {
            Chart::Polar
        }
    }

    pub fn names(self) -> [&'static str; 5] {
        match self {
            Chart::Polar => POLAR_NAMES,
            Chart::Cartesian => CARTESIAN_NAMES,
        }
    }

    pub fn coordinates(self, p: &GaussianParams) -> Vec<f64> {
        match self {
            Chart::Polar => p.to_vec(),
            Chart::Cartesian => p.to_cartesian(),
        }
    }

    pub fn params(self, l: &[f64]) -> Result<GaussianParams> {
        match self {
            Chart::Polar => GaussianParams::from_slice(l),
            Chart::Cartesian => {
                if l.len() != 5 {
                    return Err(Error::DimensionMismatch {
                        expected: 5,
                        got: l.len(),
                    });
                }
                GaussianParams::new(l[0], l[1], l[2].hypot(l[3]), l[3].atan2(l[2]), l[4])
            }
        }
    }

    pub fn state(self, l: &[f64]) -> Result<GaussianState> {
        match self {
            Chart::Polar => moments_polar(l),
            Chart::Cartesian => moments_cartesian(l),
        }
    }
}

struct MomentDerivatives {
    state: GaussianState,
    dd: Vec<Vector2<f64>>,
    dsigma: Vec<Matrix2<f64>>,
    dmu: Vec<f64>,
}

fn moment_derivatives<F>(state_fn: &F, lambda: &[f64], h: f64) -> Result<MomentDerivatives>
where
    F: Fn(&[f64]) -> Result<GaussianState>,
{
    if !(h > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference step {h} must be positive"
        )));
    }
    let state = state_fn(lambda)?;
    let mut shifted = lambda.to_vec();
    let (mut dd, mut dsigma, mut dmu) = (Vec::new(), Vec::new(), Vec::new());
    for a in 0..lambda.len() {
        shifted[a] = lambda[a] + h;
        let plus = state_fn(&shifted)?;
        shifted[a] = lambda[a] - h;
        let minus = state_fn(&shifted)?;
        shifted[a] = lambda[a];
        let inv = 1.0 / (2.0 * h);
        dd.push((plus.d - minus.d) * inv);
        dsigma.push((plus.sigma - minus.sigma) * inv);
        dmu.push((plus.purity() - minus.purity()) * inv);
    }
    Ok(MomentDerivatives {
        state,
        dd,
        dsigma,
        dmu,
    })
}

/// QFIM and Uhlmann curvature of a single-mode Gaussian family.
///
/// Derivatives of `(d, σ, μ)` are central differences with step `h`.
/// For a pure state the purity term of the QFIM is dropped when the family
/// stays pure to first order; otherwise it diverges and `PureStateSingular`
/// is returned.
pub fn gaussian_geometry<F>(state_fn: F, lambda: &[f64], h: f64) -> Result<(RMatrix, RMatrix)>
where
    F: Fn(&[f64]) -> Result<GaussianState>,
{
    let mu = state_fn(lambda)?.purity();
    let pure = mu >= 1.0 - PURE_MU_TOL;
    // A pure state sits on the boundary of the family; stepping outward fails.
    let m = moment_derivatives(&state_fn, lambda, h).map_err(|e| {
        if pure {
            Error::PureStateSingular { mu }
        } else {
            e
        }
    })?;
    if pure && m.dmu.iter().any(|x| x.abs() > PURE_DMU_TOL) {
        return Err(Error::PureStateSingular { mu });
    }
    let sigma = m.state.sigma;
    let sigma_inv = sigma
        .try_inverse()
        .ok_or_else(|| Error::InvalidState("covariance is singular".into()))?;
    let om = symplectic_form();
    let left: Vec<Matrix2<f64>> = m.dsigma.iter().map(|ds| sigma_inv * ds).collect();
    let right: Vec<Matrix2<f64>> = m.dsigma.iter().map(|ds| ds * sigma_inv).collect();
    let mu2 = mu * mu;
    let p = lambda.len();
    let mut q = RMatrix::zeros(p, p);
    let mut u = RMatrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            let mut qab = 0.5 * (left[a] * left[b]).trace() / (1.0 + mu2)
                + 2.0 * (m.dd[a].transpose() * sigma_inv * m.dd[b])[(0, 0)];
            if !pure {
                qab += 2.0 * m.dmu[a] * m.dmu[b] / (1.0 - mu2 * mu2);
            }
            q[(a, b)] = qab;
            let comm = right[a] * right[b] - right[b] * right[a];
            u[(a, b)] = -mu2 / (2.0 * (1.0 + mu2).powi(2)) * (sigma * om * comm).trace()
                + 2.0 * mu2 * (m.dd[a].transpose() * om * m.dd[b])[(0, 0)];
        }
    }
    Ok(((&q + q.transpose()) * 0.5, (&u - u.transpose()) * 0.5))
}

pub fn gaussian_qfim<F>(state_fn: F, lambda: &[f64], h: f64) -> Result<RMatrix>
where
    F: Fn(&[f64]) -> Result<GaussianState>,
{
    Ok(gaussian_geometry(state_fn, lambda, h)?.0)
}

pub fn gaussian_uhlmann<F>(state_fn: F, lambda: &[f64], h: f64) -> Result<RMatrix>
where
    F: Fn(&[f64]) -> Result<GaussianState>,
{
    Ok(gaussian_geometry(state_fn, lambda, h)?.1)
}

/// Closed-form QFIM of the five-parameter family in the polar chart.
pub fn closed_form_qfim(p: &GaussianParams) -> RMatrix {
    let mu = p.purity();
    let (sh, ch) = ((2.0 * p.r).sinh(), (2.0 * p.r).cosh());
    let mut q = RMatrix::zeros(5, 5);
    q[(0, 0)] = 4.0 * mu * (ch - p.phi.cos() * sh);
    q[(1, 1)] = 4.0 * mu * (ch + p.phi.cos() * sh);
    q[(0, 1)] = 4.0 * mu * sh * p.phi.sin();
    q[(1, 0)] = q[(0, 1)];
    q[(2, 2)] = 4.0 / (1.0 + mu * mu);
    q[(3, 3)] = sh * sh / (1.0 + mu * mu);
    q[(4, 4)] = 4.0 * mu * mu / (1.0 - mu * mu);
    q
}

/// Closed-form Uhlmann curvature of the five-parameter family in the polar chart.
pub fn closed_form_uhlmann(p: &GaussianParams) -> RMatrix {
    let mu = p.purity();
    let mut u = RMatrix::zeros(5, 5);
    u[(0, 1)] = 4.0 * mu * mu;
    u[(1, 0)] = -u[(0, 1)];
    u[(3, 2)] = 4.0 * mu * (2.0 * p.r).sinh() / (1.0 + mu * mu).powi(2);
    u[(2, 3)] = -u[(3, 2)];
    u
}

/// AI of the five-parameter family, `2μ/(1+μ²)`.
pub fn ai_gaussian(mu: f64) -> f64 {
    2.0 * mu / (1.0 + mu * mu)
}

/// Spectrum of `i Q⁻¹ U` for the five-parameter family, descending.
pub fn closed_form_spectrum(mu: f64) -> Vec<f64> {
    let a = ai_gaussian(mu);
    vec![a, mu, 0.0, -mu, -a]
}

/// Estimation report of the five-parameter family at `p`.
pub fn gaussian_report(
    p: &GaussianParams,
    chart: Chart,
    tol: &Tolerances,
) -> Result<EstimationReport> {
    p.validate()?;
    if chart == Chart::Polar && p.r < POLAR_CHART_MIN_R {
        return Err(Error::DegenerateChart(format!(
            "polar squeezing chart is singular at r = {}",
            p.r
        )));
    }
    let l = chart.coordinates(p);
    let (q, u) = gaussian_geometry(|x| chart.state(x), &l, GAUSSIAN_FD_STEP)?;
    EstimationReport::from_matrices(q, u, tol.eig_tol)
}

/// Rotation by angle `θ` acting on `(q, p)` under `ω(q² + p²)/2`.
fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Moments after time `t` of free rotation at frequency `ω` and loss at rate `γ`.
pub fn evolve_lossy(
    initial: &GaussianState,
    omega: f64,
    gamma: f64,
    t: f64,
) -> Result<GaussianState> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!(
            "loss rate {gamma} must be nonnegative"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time {t} must be nonnegative")));
    }
    let e = (-gamma * t).exp();
    let rot = rotation(omega * t);
    Ok(GaussianState {
        d: rot * initial.d * e.sqrt(),
        sigma: rot * initial.sigma * rot.transpose() * e + Matrix2::identity() * (1.0 - e),
    })
}

/// Purity `1/√det σ(t)` under [`evolve_lossy`].
pub fn lossy_purity(initial: &GaussianState, gamma: f64, t: f64) -> Result<f64> {
    Ok(evolve_lossy(initial, 0.0, gamma, t)?.purity())
}

/// RK4 integration of `ḋ = (−γ/2 + ωΩ) d`, `σ̇ = Aσ + σAᵀ + γ𝟙`.
pub fn integrate_moments(
    initial: &GaussianState,
    omega: f64,
    gamma: f64,
    t: f64,
    steps: usize,
) -> GaussianState {
    let a = Matrix2::identity() * (-gamma / 2.0) + symplectic_form() * omega;
    let rhs = |d: &Vector2<f64>, s: &Matrix2<f64>| {
        (
            a * d,
            a * s + s * a.transpose() + Matrix2::identity() * gamma,
        )
    };
    let dt = t / steps.max(1) as f64;
    let (mut d, mut s) = (initial.d, initial.sigma);
    for _ in 0..steps.max(1) {
        let (k1d, k1s) = rhs(&d, &s);
        let (k2d, k2s) = rhs(&(d + k1d * (dt / 2.0)), &(s + k1s * (dt / 2.0)));
        let (k3d, k3s) = rhs(&(d + k2d * (dt / 2.0)), &(s + k2s * (dt / 2.0)));
        let (k4d, k4s) = rhs(&(d + k3d * dt), &(s + k3s * dt));
        d += (k1d + k2d * 2.0 + k3d * 2.0 + k4d) * (dt / 6.0);
        s += (k1s + k2s * 2.0 + k3s * 2.0 + k4s) * (dt / 6.0);
    }
    GaussianState { d, sigma: s }
}

/// Two-parameter report for estimating `(ω, γ)` from the state at time `t`.
pub fn freq_loss_model(
    initial: &GaussianParams,
    omega: f64,
    gamma: f64,
    t: f64,
    tol: &Tolerances,
) -> Result<EstimationReport> {
    initial.validate()?;
    if gamma < GAUSSIAN_FD_STEP {
        return Err(Error::Domain(format!(
            "loss rate {gamma} must exceed the finite-difference step {GAUSSIAN_FD_STEP:e}"
        )));
    }
    let s0 = moments(initial);
    let (q, u) = gaussian_geometry(
        |l| evolve_lossy(&s0, l[0], l[1], t),
        &[omega, gamma],
        GAUSSIAN_FD_STEP,
    )?;
    EstimationReport::from_matrices(q, u, tol.eig_tol)
}

/// Pure initial state with mean photon number `n_mean`, a fraction `eta` of
/// which comes from squeezing. `α` is real and `φ = 0`.
pub fn excitation_parametrization(n_mean: f64, eta: f64) -> Result<GaussianParams> {
    if !(n_mean >= 0.0) || !n_mean.is_finite() {
        return Err(Error::Domain(format!(
            "mean photon number {n_mean} must be nonnegative"
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!(
            "squeezing fraction {eta} must lie in [0, 1]"
        )));
    }
    GaussianParams::new(
        ((1.0 - eta) * n_mean).sqrt(),
        0.0,
        (eta * n_mean).sqrt().asinh(),
        0.0,
        0.0,
    )
}

fn annihilation(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// `exp(G)` for anti-Hermitian `G`, through the eigenbasis of `iG`.
fn unitary_exp(g: &CMatrix) -> CMatrix {
    HermitianMatrix::hermitize(g * C64::i())
        .eig()
        .apply(|x| C64::from_polar(1.0, -x))
}

/// `D(α) S(ζ) ν_N S† D†` truncated to Fock levels `0..=n_max`.
fn fock_state(alpha: C64, zeta: C64, n_thermal: f64, n_max: usize) -> Result<DensityMatrix> {
    let dim = n_max + 1 + FOCK_PADDING;
    let a = annihilation(dim);
    let ad = a.adjoint();
    let disp = unitary_exp(&(&ad * alpha - &a * alpha.conj()));
    let sq = unitary_exp(&((&ad * &ad) * (zeta * 0.5) - (&a * &a) * (zeta.conj() * 0.5)));
    let ratio = n_thermal / (n_thermal + 1.0);
    let thermal: Vec<f64> = (0..dim)
        .map(|n| ratio.powi(n as i32) / (n_thermal + 1.0))
        .collect();
    let u = disp * sq;
    let full = HermitianMatrix::from_real_diagonal(&thermal).conjugate_by(&u);
    let m = n_max + 1;
    let block = full.matrix().view((0, 0), (m, m)).into_owned();
    let h = HermitianMatrix::hermitize(block);
    let deficit = 1.0 - h.trace();
    if deficit > FOCK_TRACE_TOL {
        return Err(Error::Truncation { deficit, n_max });
    }
    DensityMatrix::renormalized(h)
}

/// Fock-space density matrix of a five-parameter state, truncated at `n_max`.
pub fn to_fock(p: &GaussianParams, n_max: usize) -> Result<DensityMatrix> {
    p.validate()?;
    fock_state(
        C64::new(p.re_alpha, p.im_alpha),
        p.zeta(),
        p.n_thermal,
        n_max,
    )
}

/// Smallest `n_max` (in steps of 10) whose truncation meets the trace criterion.
pub fn adaptive_n_max(p: &GaussianParams, limit: usize) -> Result<usize> {
    let mut n = 10;
    loop {
        match to_fock(p, n) {
            Ok(_) => return Ok(n),
            Err(Error::Truncation { .. }) if n < limit => n += 10,
            Err(e) => return Err(e),
        }
    }
}

/// Finite-dimensional pipeline applied to the truncated Fock state.
///
/// Derivatives are central differences with step `h` in the given chart;
/// SLD matrix elements between Fock-tail eigenvectors of negligible weight
/// are dropped.
pub fn fock_report(
    p: &GaussianParams,
    chart: Chart,
    n_max: usize,
    h: f64,
    eig_tol: f64,
) -> Result<EstimationReport> {
    let l = chart.coordinates(p);
    let eval = |x: &[f64]| to_fock(&chart.params(x)?, n_max);
    let rho = eval(&l)?;
    let drhos = crate::model::finite_diff_derivs(eval, &l, h)?;
    let (q, u) = geometry_on_support(&rho, &drhos, FOCK_SUPPORT_TOL);
    EstimationReport::from_matrices(q, u, eig_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, purity};

    fn params(r: f64, phi: f64, n: f64) -> GaussianParams {
        GaussianParams::new(0.3, -0.2, r, phi, n).unwrap()
    }

    #[test]
    fn moments_examples() {
        let s = moments(&GaussianParams::new(0.0, 0.0, 0.0, 0.0, 0.0).unwrap());
        assert_eq!(s.d, Vector2::zeros());
        assert_eq!(s.sigma, Matrix2::identity());

        let s = moments(&GaussianParams::new(0.0, 0.0, 0.0, 0.0, 0.5).unwrap());
        assert_eq!(s.sigma, Matrix2::identity() * 2.0);
        assert!((s.purity() - 0.5).abs() < 1e-15);

        let s = moments(&GaussianParams::new(0.0, 0.0, 0.3, PI / 2.0, 0.0).unwrap());
        assert!((s.sigma[(0, 1)] + 0.6_f64.sinh()).abs() < 1e-15);
        assert!((s.sigma[(0, 0)] - s.sigma[(1, 1)]).abs() < 1e-15);
    }

    #[test]
    fn purity_matches_thermal_number() {
        for n in [0.1, 0.5, 1.0, 3.0] {
            let p = params(0.7, 1.1, n);
            assert!((moments(&p).purity() - p.purity()).abs() < 1e-13);
        }
    }

    #[test]
    fn williamson_round_trip() {
        let p = params(0.45, 2.0, 0.8);
        let back = moments(&p).to_params();
        for (a, b) in p.to_vec().iter().zip(back.to_vec()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn unphysical_covariance_rejected() {
        let bad = Matrix2::identity() * 0.5;
        assert!(GaussianState::new(Vector2::zeros(), bad).is_err());
        assert!(GaussianState::new(Vector2::zeros(), Matrix2::new(2.0, 0.1, 0.0, 2.0)).is_err());
    }

    #[test]
    fn cartesian_chart_agrees_with_polar() {
        let p = params(0.4, 0.9, 0.3);
        let a = moments(&p);
        let b = moments_cartesian(&p.to_cartesian()).unwrap();
        assert!((a.sigma - b.sigma).amax() < 1e-13);
        let c = moments_cartesian(&[0.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(c.sigma, Matrix2::identity() * 2.0);
    }

    #[test]
    fn qfim_and_uhlmann_match_closed_forms() {
        for &r in &[0.2, 0.5] {
            for &phi in &[0.0, PI / 3.0, PI / 2.0] {
                let p = params(r, phi, 0.5);
                let (q, u) =
                    gaussian_geometry(moments_polar, &p.to_vec(), GAUSSIAN_FD_STEP).unwrap();
                assert!((&q - closed_form_qfim(&p)).amax() < 1e-6);
                assert!((&u - closed_form_uhlmann(&p)).amax() < 1e-6);
            }
        }
    }

    #[test]
    fn polar_entries_at_zero_squeezing() {
        let p = params(0.0, 0.4, 0.5);
        let (q, u) = gaussian_geometry(moments_polar, &p.to_vec(), GAUSSIAN_FD_STEP).unwrap();
        assert!((&q - closed_form_qfim(&p)).amax() < 1e-6);
        assert!((&u - closed_form_uhlmann(&p)).amax() < 1e-6);
        assert!(q[(3, 3)].abs() < 1e-12);
    }

    #[test]
    fn displacement_curvature_is_four_mu_squared() {
        let p = params(0.3, 0.2, 1.0);
        let u = gaussian_uhlmann(moments_polar, &p.to_vec(), GAUSSIAN_FD_STEP).unwrap();
        assert!((u[(0, 1)] - 4.0 * p.purity().powi(2)).abs() < 1e-8);
    }

    #[test]
    fn spectrum_matches_closed_form() {
        let p = params(0.5, PI / 3.0, 0.1);
        let rep = gaussian_report(&p, Chart::Polar, &Tolerances::default()).unwrap();
        for (a, b) in rep.i_spectrum.iter().zip(closed_form_spectrum(p.purity())) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(rep.compat_bound, 3);
    }

    #[test]
    fn unsqueezed_state_uses_cartesian_chart() {
        let p = params(0.0, 0.0, 0.5);
        assert_eq!(Chart::for_params(&p), Chart::Cartesian);
        assert!(matches!(
            gaussian_report(&p, Chart::Polar, &Tolerances::default()),
            Err(Error::DegenerateChart(_))
        ));
        let rep = gaussian_report(&p, Chart::Cartesian, &Tolerances::default()).unwrap();
        assert!((rep.r - 0.8).abs() < 1e-6);
    }

    #[test]
    fn ai_gaussian_examples() {
        assert_eq!(ai_gaussian(1.0), 1.0);
        assert!((ai_gaussian(0.5) - 0.8).abs() < 1e-15);
        assert!(ai_gaussian(1e-9) < 1e-8);
    }

    #[test]
    fn pure_full_model_is_singular() {
        let p = params(0.3, 0.2, 0.0);
        assert!(matches!(
            gaussian_geometry(moments_polar, &p.to_vec(), GAUSSIAN_FD_STEP),
            Err(Error::PureStateSingular { .. })
        ));
    }

    #[test]
    fn coherent_family_is_maximally_incompatible() {
        let l = [0.5, -0.1];
        let f = |x: &[f64]| moments_polar(&[x[0], x[1], 0.0, 0.0, 0.0]);
        let (q, u) = gaussian_geometry(f, &l, GAUSSIAN_FD_STEP).unwrap();
        let rep = EstimationReport::from_matrices(q, u, 1e-8).unwrap();
        assert!((rep.r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lossy_evolution_examples() {
        let s = moments(&GaussianParams::new(1.0, 0.5, 0.7, 0.3, 0.2).unwrap());
        let late = evolve_lossy(&s, 1.0, 1.0, 60.0).unwrap();
        assert!(late.d.amax() < 1e-12 && (late.sigma - Matrix2::identity()).amax() < 1e-12);

        let coh = moments(&GaussianParams::new(2.0, 0.0, 0.0, 0.0, 0.0).unwrap());
        for t in [0.1, 1.0, 3.0] {
            assert!((evolve_lossy(&coh, 1.0, 1.0, t).unwrap().purity() - 1.0).abs() < 1e-14);
        }

        let sq = moments(&excitation_parametrization(4.0, 1.0).unwrap());
        assert!((sq.sigma.trace() / 2.0 - 9.0).abs() < 1e-12);
        let t = 2f64.ln();
        let st = evolve_lossy(&sq, 0.4, 1.0, t).unwrap();
        assert!((st.sigma.determinant() - 5.0).abs() < 1e-12);
        assert!((st.purity() - 1.0 / 5f64.sqrt()).abs() < 1e-12);

        assert!(evolve_lossy(&s, 1.0, -0.1, 1.0).is_err());
    }

    #[test]
    fn lossy_evolution_matches_ode() {
        let s = moments(&GaussianParams::new(0.8, 0.3, 0.5, 0.4, 0.1).unwrap());
        for t in [0.3, 1.0, 2.5] {
            let exact = evolve_lossy(&s, 1.3, 0.7, t).unwrap();
            let ode = integrate_moments(&s, 1.3, 0.7, t, 2000);
            assert!((exact.d - ode.d).amax() < 1e-10);
            assert!((exact.sigma - ode.sigma).amax() < 1e-10);
        }
    }

    #[test]
    fn excitation_examples() {
        let p = excitation_parametrization(4.0, 0.0).unwrap();
        assert_eq!((p.r, p.re_alpha), (0.0, 2.0));
        let p = excitation_parametrization(4.0, 1.0).unwrap();
        assert!((p.r.sinh().powi(2) - 4.0).abs() < 1e-12 && p.re_alpha == 0.0);
        let p = excitation_parametrization(0.0, 0.5).unwrap();
        assert_eq!(moments(&p), GaussianState::vacuum());
        assert!(excitation_parametrization(-1.0, 0.5).is_err());
        assert!(excitation_parametrization(1.0, 1.5).is_err());
    }

    #[test]
    fn freq_loss_report_is_bounded_by_five_parameter_ai() {
        let init = excitation_parametrization(4.0, 1.0).unwrap();
        let s0 = moments(&init);
        for t in [0.5, 1.0, 2.0, 4.0] {
            let rep = freq_loss_model(&init, 1.0, 1.0, t, &Tolerances::default()).unwrap();
            let r5 = ai_gaussian(lossy_purity(&s0, 1.0, t).unwrap());
            assert!(rep.r <= r5 + 1e-8, "t = {t}: {} > {r5}", rep.r);
        }
        assert!(matches!(
            freq_loss_model(&init, 1.0, 1.0, 0.0, &Tolerances::default()),
            Err(Error::SingularQfim { .. })
        ));
    }

    #[test]
    fn thermal_fock_state_is_geometric() {
        let n = 0.2;
        let rho = to_fock(&GaussianParams::new(0.0, 0.0, 0.0, 0.0, n).unwrap(), 40).unwrap();
        for k in 0..=40 {
            let expected = (n / (n + 1.0)).powi(k as i32) / (n + 1.0);
            assert!((rho.matrix()[(k, k)].re - expected).abs() < 1e-12);
        }
        let off = rho.matrix() - CMatrix::from_diagonal(&rho.matrix().diagonal());
        assert!(max_abs(&off) < 1e-12);
    }

    #[test]
    fn fock_moments_match_gaussian_moments() {
        let p = params(0.4, 0.7, 0.5);
        let n_max = 60;
        let rho = to_fock(&p, n_max).unwrap();
        let a = annihilation(n_max + 1);
        let ad = a.adjoint();
        let s = C64::new(1.0 / SQRT_2, 0.0);
        let q = (&a + &ad) * s;
        let pq = (&ad - &a) * (C64::i() * s);
        let ev = |m: &CMatrix| (rho.matrix() * m).trace().re;
        let (mq, mp) = (ev(&q), ev(&pq));
        let g = moments(&p);
        assert!((mq - g.d[0]).abs() < 1e-8 && (mp - g.d[1]).abs() < 1e-8);
        let sqq = 2.0 * ev(&(&q * &q)) - 2.0 * mq * mq;
        let sqp = ev(&(&q * &pq + &pq * &q)) - 2.0 * mq * mp;
        assert!((sqq - g.sigma[(0, 0)]).abs() < 1e-7);
        assert!((sqp - g.sigma[(0, 1)]).abs() < 1e-7);
        assert!((purity(&rho) - p.purity()).abs() < 1e-6);
    }

    #[test]
    fn fock_pipeline_reproduces_ai() {
        for (r, chart) in [(0.3, Chart::Polar), (0.0, Chart::Cartesian)] {
            let p = GaussianParams::new(0.3, -0.2, r, 0.4, 0.5).unwrap();
            let rep = fock_report(&p, chart, 60, 1e-5, 1e-8).unwrap();
            assert!((rep.r - 0.8).abs() < 1e-4, "r = {r}: {}", rep.r);
        }
    }

    #[test]
    fn small_truncation_is_reported() {
        let p = GaussianParams::new(3.0, 0.0, 0.5, 0.0, 1.0).unwrap();
        assert!(matches!(to_fock(&p, 5), Err(Error::Truncation { .. })));
        assert!(adaptive_n_max(&p, 200).unwrap() > 5);
    }

    #[test]
    fn gaussian_state_json_shape() {
        let v = serde_json::to_value(GaussianState::vacuum()).unwrap();
        assert_eq!(v["d"].as_array().unwrap().len(), 2);
        assert_eq!(v["sigma"][1][1], 1.0);
    }
}
