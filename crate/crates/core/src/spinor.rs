//! Schrödinger representation of the Heisenberg algebra on half-densities
//! on `Q`, pure symplectic spinors on lagrangians transversal to `L_0`, the
//! Fresnel integral with its signature phase, the evaluation distribution
//! `phi`, and the order of `phi` as a Fourier integral distribution.
//!
//! Half-densities are reported as scalar coefficients against `sqrt|dx|`
//! in the canonical coordinates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_TAU};
use crate::quadrature;
use crate::symplectic::{graph_from_symmetric, omega_matrix, LagrangianFrame, SymmetricForm, SymplecticSpace};

/// The position spinor `c e^{i<x,Bx>/2}` is annihilated by `sigma(u)` for
/// `u = (w, zeta)` exactly when `zeta = SPINOR_GRAPH_SIGN * B w`, i.e. by the
/// graph of `SPINOR_GRAPH_SIGN * B` in the chart based at `Q`.
pub const SPINOR_GRAPH_SIGN: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// `coeff * exp(+i <x, quad x> / 2)` on `Q`.
    Position,
    /// `coeff * exp(-i <xi, quad xi> / 2)` on `L_0`.
    Momentum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpinor {
    pub quad: SymmetricForm,
    pub coeff: Complex64,
    pub rep: Representation,
}

impl GaussianSpinor {
    pub fn position(quad: SymmetricForm, coeff: Complex64) -> Self {
        Self { quad, coeff, rep: Representation::Position }
    }

    pub fn momentum(quad: SymmetricForm, coeff: Complex64) -> Self {
        Self { quad, coeff, rep: Representation::Momentum }
    }

    fn phase_sign(&self) -> f64 {
        match self.rep {
            Representation::Position => 1.0,
            Representation::Momentum => -1.0,
        }
    }

    pub fn value_at(&self, x: &DVector<f64>) -> Complex64 {
        let q = x.dot(&(self.quad.matrix() * x));
        self.coeff * Complex64::from_polar(1.0, self.phase_sign() * q / 2.0)
    }

    /// The lagrangian whose operators annihilate this spinor.
    pub fn annihilator(&self) -> LagrangianFrame {
        let n = self.quad.n();
        let space = SymplecticSpace::canonical(n).expect("n >= 1");
        match self.rep {
            Representation::Position => graph_from_symmetric(&self.quad.scaled(SPINOR_GRAPH_SIGN), &space.q_chart()),
            // {(w, zeta) : w = -A zeta}, the graph of A over L_0
            Representation::Momentum => graph_from_symmetric(&self.quad, &space.l0_chart()),
        }
    }
}

/// `q_part e + p_part f + i * central` in the Heisenberg algebra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeisenbergElement {
    pub q_part: Vec<f64>,
    pub p_part: Vec<f64>,
    pub central: f64,
}

impl HeisenbergElement {
    pub fn from_vector(u: &DVector<f64>) -> Self {
        let n = u.len() / 2;
        Self { q_part: u.rows(0, n).iter().copied().collect(), p_part: u.rows(n, n).iter().copied().collect(), central: 0.0 }
    }

    pub fn vector(&self) -> DVector<f64> {
        DVector::from_iterator(2 * self.q_part.len(), self.q_part.iter().chain(self.p_part.iter()).copied())
    }

    pub fn norm(&self) -> f64 {
        (self.vector().norm_squared() + self.central * self.central).sqrt()
    }
}

/// `[u, w] = -i omega(u, w)`; only the central coefficient survives.
pub fn heisenberg_bracket(u: &HeisenbergElement, w: &HeisenbergElement) -> HeisenbergElement {
    let n = u.q_part.len();
    let uv = DMatrix::from_column_slice(2 * n, 1, u.vector().as_slice());
    let wv = DMatrix::from_column_slice(2 * n, 1, w.vector().as_slice());
    let omega = omega_matrix(&uv, &wv)[(0, 0)];
    HeisenbergElement { q_part: vec![0.0; n], p_part: vec![0.0; n], central: -omega }
}

/// Largest `|(sigma(u) psi)(x)|` over the given points, with
/// `sigma(e_j) = -i d/dx_j` and `sigma(f_j) = x_j` in the position picture
/// (`sigma(e_j) = xi_j`, `sigma(f_j) = i d/dxi_j` in the momentum picture).
pub fn apply_sigma(u: &HeisenbergElement, s: &GaussianSpinor, points: &[DVector<f64>]) -> f64 {
    let w = DVector::from_column_slice(&u.q_part);
    let zeta = DVector::from_column_slice(&u.p_part);
    let mut worst = 0.0_f64;
    for x in points {
        let bx = s.quad.matrix() * x;
        // derivative of the Gaussian factor is available in closed form
        let multiplier = match s.rep {
            Representation::Position => w.dot(&bx) + zeta.dot(x),
            Representation::Momentum => w.dot(x) + zeta.dot(&bx),
        };
        let value = s.value_at(x) * Complex64::new(multiplier, u.central);
        worst = worst.max(value.norm());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FresnelResult {
    pub value: Complex64,
    pub abs_det: f64,
    pub signature: i32,
}

/// Closed form of `∫ exp(-i <A eta, eta> / 2) d eta`:
/// `(2π)^{n/2} |det A|^{-1/2} exp(-iπ sgn(A) / 4)`.
pub fn fresnel_gaussian(a: &SymmetricForm) -> Result<FresnelResult> {
    let (vals, _) = linalg::sym_eigen(a.matrix());
    let signature = a.signature(DEFAULT_TAU)?;
    let abs_det: f64 = vals.iter().map(|v| v.abs()).product();
    let n = a.n() as f64;
    let modulus = (2.0 * PI).powf(n / 2.0) / abs_det.sqrt();
    let value = Complex64::from_polar(modulus, -PI / 4.0 * signature as f64);
    Ok(FresnelResult { value, abs_det, signature })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Damping parameters, largest first.
    pub eps_schedule: Vec<f64>,
    /// Declared relative tolerance on the extrapolation error estimate.
    pub tol: f64,
    /// Relative accuracy requested from each damped quadrature.
    pub quad_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { eps_schedule: vec![1e-1, 1e-2, 1e-3], tol: 1e-3, quad_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleValue {
    pub value: Complex64,
    pub error: f64,
    pub damped: Vec<Complex64>,
}

/// `-log` of the damping factor at which integrals are truncated.
const TRUNCATION_EXPONENT: f64 = 25.0;

/// `∫_lo^∞ e^{-(eps + i a) s / 2} w(s) ds` by panels of half an oscillation
/// period (or one damping length), truncated where the damping is negligible.
/// The weight may vary quickly on `[lo, ramp_end]`, which gets its own panels.
fn damped_ray(a: f64, eps: f64, lo: f64, ramp_end: f64, weight: impl Fn(f64) -> f64, abs_tol: f64) -> Result<Complex64> {
    let z = Complex64::new(eps, a);
    let end = ramp_end + 2.0 * TRUNCATION_EXPONENT / eps;
    // half an oscillation or one damping length per panel
    let half_period = if a == 0.0 { f64::INFINITY } else { 2.0 * PI / a.abs() };
    let step = half_period.min(1.0 / eps);
    let count = ((end - ramp_end) / step).ceil().max(1.0) as usize;
    let half = z / 2.0;
    let mut total = Complex64::new(0.0, 0.0);
    if ramp_end > lo {
        total += quadrature::exponential_panels(half, &weight, lo, ramp_end, 8, 0.5 * abs_tol)?;
    }
    total += quadrature::exponential_panels(half, &weight, ramp_end, end, count, 0.5 * abs_tol)?;
    Ok(total)
}

/// `∫ exp(-i <A eta, eta>/2 - eps |eta|^2 / 2) d eta` by direct quadrature
/// (the line for `n = 1`, polar coordinates for `n = 2`).
fn damped_fresnel(a: &SymmetricForm, eps: f64, quad_tol: f64) -> Result<Complex64> {
    let m = a.matrix();
    match a.n() {
        1 => {
            let alpha = m[(0, 0)];
            let reach = (2.0 * TRUNCATION_EXPONENT / eps).sqrt();
            let pts = quadrature::quadratic_phase_breakpoints(alpha, 0.0, -reach, reach, (1.0 / eps).sqrt());
            let z = Complex64::new(eps, alpha);
            let mut f = |x: f64| (-z * x * x / 2.0).exp();
            let scale = (2.0 * PI / eps).sqrt();
            Ok(quadrature::over_breakpoints(&mut f, &pts, quad_tol * scale)?.0)
        }
        2 => {
            let scale = 2.0 * PI / eps;
            let ray_tol = 1e-2 * quad_tol / eps;
            let mut err: Option<Error> = None;
            let mut angular = |phi: f64| {
                let (c, s) = (phi.cos(), phi.sin());
                let q = m[(0, 0)] * c * c + 2.0 * m[(0, 1)] * c * s + m[(1, 1)] * s * s;
                // r dr = ds / 2
                match damped_ray(q, eps, 0.0, 0.0, |_| 0.5, ray_tol) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        Complex64::new(0.0, 0.0)
                    }
                }
            };
            let pts: Vec<f64> = (0..=8).map(|i| PI * i as f64 / 8.0).collect();
            let (half, _) = quadrature::over_breakpoints(&mut angular, &pts, 0.5 * quad_tol * scale)?;
            if let Some(e) = err {
                return Err(e);
            }
            Ok(half * 2.0)
        }
        n => Err(Error::UnsupportedDim { n, max: 2 }),
    }
}

fn extrapolate(schedule: &[f64], damped: Vec<Complex64>, tol: f64) -> Result<OracleValue> {
    let (value, error) = quadrature::extrapolate_to_zero(schedule, &damped);
    if !(error <= tol * value.norm()) {
        return Err(Error::NonConvergent { estimate: error / value.norm(), tol });
    }
    Ok(OracleValue { value, error, damped })
}

/// Abel-damped quadrature of the Fresnel integral, extrapolated to zero damping.
pub fn fresnel_quadrature_oracle(a: &SymmetricForm, cfg: &OracleConfig) -> Result<OracleValue> {
    if a.n() > 2 {
        return Err(Error::UnsupportedDim { n: a.n(), max: 2 });
    }
    let k = a.nullity(DEFAULT_TAU);
    if k > 0 {
        return Err(Error::SingularForm(k));
    }
    let damped = cfg.eps_schedule.iter().map(|&e| damped_fresnel(a, e, cfg.quad_tol)).collect::<Result<Vec<_>>>()?;
    extrapolate(&cfg.eps_schedule, damped, cfg.tol)
}

/// `Psi(A, c)` in position form: `c |det A|^{-1/2} e^{i(<A^{-1}x,x>/2 - π sgn(A)/4)}`.
pub fn psi(a: &SymmetricForm, c: Complex64) -> Result<GaussianSpinor> {
    let fr = fresnel_gaussian(a)?;
    let inv = a.inverse(DEFAULT_TAU)?;
    let coeff = c * Complex64::from_polar(fr.abs_det.powf(-0.5), -PI / 4.0 * fr.signature as f64);
    Ok(GaussianSpinor::position(inv, coeff))
}

/// The momentum-side datum `c e^{-i<A xi, xi>/2}` that `psi` transforms.
pub fn momentum_spinor(a: &SymmetricForm, c: Complex64) -> GaussianSpinor {
    GaussianSpinor::momentum(a.clone(), c)
}

/// `phi(Psi(A, c))`: the position spinor evaluated at `x = 0`.
pub fn evaluate_phi(a: &SymmetricForm, c: Complex64) -> Result<Complex64> {
    Ok(psi(a, c)?.coeff)
}

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn cutoff(u: f64) -> f64 {
    let g = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if u <= 1.0 {
        1.0
    } else if u >= 2.0 {
        0.0
    } else {
        let (l, r) = (g(2.0 - u), g(u - 1.0));
        l / (l + r)
    }
}

/// `(c/2)(2π)^{-n/2} ∫_{S^{n-1}} ∫_0^∞ e^{-is<Aθ,θ>/2} s^{n/2-1} ds dθ` with
/// `c = 1`, split by the cutoff `χ(s / cutoff_scale)`: the compact part by
/// direct quadrature, the tail with damping and extrapolation.
pub fn oscillatory_phi_oracle(a: &SymmetricForm, cutoff_scale: f64, cfg: &OracleConfig) -> Result<OracleValue> {
    let n = a.n();
    if n > 2 {
        return Err(Error::UnsupportedDim { n, max: 2 });
    }
    if !(cutoff_scale > 0.0) {
        return Err(Error::InvalidArgument("cutoff scale must be positive".into()));
    }
    let k = a.nullity(DEFAULT_TAU);
    if k > 0 {
        return Err(Error::SingularForm(k));
    }
    let m = a.matrix().clone();
    let sigma = cutoff_scale;
    let quad_on = |theta_q: f64, eps: Option<f64>| -> Result<Complex64> {
        let ray_tol = cfg.quad_tol * 1e-2;
        match eps {
            None => {
                // compact part; for n = 1 substitute s = r^2 to remove s^{-1/2}
                let top = 2.0 * sigma;
                if n == 1 {
                    let r_top = top.sqrt();
                    let mut f = |r: f64| Complex64::from_polar(2.0 * cutoff(r * r / sigma), -theta_q * r * r / 2.0);
                    let pts = quadrature::quadratic_phase_breakpoints(theta_q, 0.0, 0.0, r_top, r_top / 8.0);
                    Ok(quadrature::over_breakpoints(&mut f, &pts, ray_tol)?.0)
                } else {
                    let mut f = |s: f64| Complex64::from_polar(cutoff(s / sigma), -theta_q * s / 2.0);
                    let steps = ((top * theta_q.abs() / (4.0 * PI)).ceil() as usize).max(4);
                    let pts: Vec<f64> = (0..=steps).map(|i| top * i as f64 / steps as f64).collect();
                    Ok(quadrature::over_breakpoints(&mut f, &pts, ray_tol)?.0)
                }
            }
            Some(e) => {
                let weight = |s: f64| (1.0 - cutoff(s / sigma)) * s.powf(n as f64 / 2.0 - 1.0);
                damped_ray(theta_q, e, sigma, 2.0 * sigma, weight, ray_tol / e)
            }
        }
    };
    let over_sphere = |eps: Option<f64>| -> Result<Complex64> {
        if n == 1 {
            // S^0 = {+1, -1}, both with <Aθ,θ> = a
            return Ok(quad_on(m[(0, 0)], eps)? * 2.0);
        }
        let mut err: Option<Error> = None;
        let mut angular = |phi: f64| {
            let (c, s) = (phi.cos(), phi.sin());
            let q = m[(0, 0)] * c * c + 2.0 * m[(0, 1)] * c * s + m[(1, 1)] * s * s;
            quad_on(q, eps).unwrap_or_else(|e| {
                err = Some(e);
                Complex64::new(0.0, 0.0)
            })
        };
        let pts: Vec<f64> = (0..=8).map(|i| PI * i as f64 / 8.0).collect();
        let scale = eps.map(|e| 2.0 / e).unwrap_or(2.0 * sigma);
        let (half, _) = quadrature::over_breakpoints(&mut angular, &pts, cfg.quad_tol * scale)?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(half * 2.0)
    };
    let prefactor = 0.5 * (2.0 * PI).powf(-(n as f64) / 2.0);
    let compact = over_sphere(None)?;
    let tails = cfg.eps_schedule.iter().map(|&e| over_sphere(Some(e))).collect::<Result<Vec<_>>>()?;
    let damped: Vec<Complex64> = tails.iter().map(|t| (compact + t) * prefactor).collect();
    extrapolate(&cfg.eps_schedule, damped, cfg.tol)
}

/// Order data of `phi` as a Fourier integral distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FidOrder {
    pub m: Ratio<i64>,
    pub k_amp: Ratio<i64>,
    pub n_vars: i64,
    pub d_dim: i64,
}

impl FidOrder {
    /// `m = k + (2N - d) / 4`.
    pub fn holds(&self) -> bool {
        self.m == self.k_amp + Ratio::new(2 * self.n_vars - self.d_dim, 4)
    }
}

pub fn fid_order(n: usize) -> Result<FidOrder> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    let n = n as i64;
    let k_amp = Ratio::new(-n, 2);
    let n_vars = n;
    let d_dim = n * (n + 1) / 2;
    let m = k_amp + Ratio::new(2 * n_vars - d_dim, 4);
    debug_assert_eq!(m, Ratio::new(-n * (n + 1), 8));
    Ok(FidOrder { m, k_amp, n_vars, d_dim })
}
