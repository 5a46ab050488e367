//! Quantitative checks of local integrability of `|det A|^{-1/2}` on the
//! symmetric matrices, the `2^{-n^2/2}` shell scaling, the ball integral as
//! a geometric series, the `-1/2` growth exponent of `phi` at the cycle, and
//! convergence of the pairing of `phi` with test densities.
//!
//! The norm on `Sym(n)` is the Frobenius norm throughout.

use nalgebra::{DMatrix, Matrix3, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::spinor::evaluate_phi;
use crate::symplectic::SymmetricForm;

pub const DEFAULT_MAX_N: usize = 4;
pub const DEFAULT_GROUPS: usize = 32;

/// `sqrt(pi / 2)`: standard error of the median of normal group means,
/// relative to that of their mean.
const MEDIAN_EFFICIENCY: f64 = 1.253_314_137_315_500_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    DeterministicQuadrature,
    MonteCarloMedianOfMeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: Method,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub seed: u64,
    /// Samples per shell; `None` picks the default for the dimension.
    pub samples: Option<u64>,
    pub groups: usize,
    pub max_n: usize,
    /// Use Monte Carlo even where a deterministic method exists.
    pub force_monte_carlo: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { seed: 0, samples: None, groups: DEFAULT_GROUPS, max_n: DEFAULT_MAX_N, force_monte_carlo: false }
    }
}

impl EstimatorConfig {
    pub fn samples_for(&self, n: usize) -> u64 {
        self.samples.unwrap_or(if n <= 3 { 1_000_000 } else { 4_000_000 })
    }
}

fn check_dim(n: usize, cfg: &EstimatorConfig) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    if n > cfg.max_n {
        return Err(Error::UnsupportedDim { n, max: cfg.max_n });
    }
    Ok(())
}

/// `∫_{r_in <= |A| <= r_out} |det A|^{-1/2} dA`.
pub fn annulus_integral(n: usize, r_in: f64, r_out: f64, cfg: &EstimatorConfig) -> Result<IntegralEstimate> {
    check_dim(n, cfg)?;
    if !(0.0 < r_in && r_in < r_out && r_out.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < r_in < r_out, got [{r_in}, {r_out}]")));
    }
    match n {
        _ if cfg.force_monte_carlo => monte_carlo_shell(n, r_in, r_out, cfg),
        1 => Ok(IntegralEstimate {
            value: 4.0 * (r_out.sqrt() - r_in.sqrt()),
            std_error: 0.0,
            method: Method::Analytic,
            samples: 0,
            seed: cfg.seed,
        }),
        2 => Ok(IntegralEstimate {
            value: spectral_shell_2(r_in, r_out)?,
            std_error: 0.0,
            method: Method::DeterministicQuadrature,
            samples: 0,
            seed: cfg.seed,
        }),
        _ => monte_carlo_shell(n, r_in, r_out, cfg),
    }
}

/// `∫_0^len f(t) dt` for `f(t) ~ t^{-1/2}` at 0, with `t = u^2`.
fn root_singular_integral(f: impl Fn(f64) -> f64, len: f64) -> Result<f64> {
    let mut g = |u: f64| Complex64::new(2.0 * u * f(u * u), 0.0);
    Ok(quadrature::adaptive(&mut g, 0.0, len.sqrt(), 1e-14, 4096)?.0.re)
}

/// Shell integral at `n = 2` in spectral coordinates `A = R diag(l1, l2) R^T`,
/// where `dA = (l1 - l2) dl1 dl2 dtheta` on `l1 > l2`, `theta in [0, pi)`.
/// With `(l1, l2) = r (cos a, sin a)` the integrand is
/// `r (cos a - sin a) |cos a sin a|^{-1/2}` on `a in (-3pi/4, pi/4)`; folding
/// the three arcs between singular directions onto `[0, pi/4]` leaves
/// `4 ∫_0^{pi/4} sqrt(cot s) ds` for the angular factor.
fn spectral_shell_2(r_in: f64, r_out: f64) -> Result<f64> {
    let angular = 4.0 * root_singular_integral(|s| (s.cos() / s.sin()).sqrt(), 0.25 * PI)?;
    let mut radial = |r: f64| Complex64::new(r, 0.0);
    let (rad, _) = quadrature::adaptive(&mut radial, r_in, r_out, 1e-15, 64)?;
    Ok(PI * rad.re * angular)
}

/// Volume of the unit ball in `R^d`.
fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent stream for one shard of one shell.
fn shard_rng(seed: u64, r_in: f64, r_out: f64, shard: u64) -> ChaCha8Rng {
    let shell = splitmix(r_in.to_bits() ^ splitmix(r_out.to_bits()));
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ shell));
    rng.set_stream(shard);
    rng
}

/// Symmetric matrix with isometric coordinates `u`: diagonal entries, then
/// the upper off-diagonal entries (row by row) times `sqrt 2`.
fn fill_from_isometric(n: usize, u: &[f64], mut set: impl FnMut(usize, usize, f64)) {
    let mut idx = n;
    for i in 0..n {
        set(i, i, u[i]);
        for j in (i + 1)..n {
            let x = u[idx] * FRAC_1_SQRT_2;
            set(i, j, x);
            set(j, i, x);
            idx += 1;
        }
    }
}

/// `|det A|^{-1/2}` at the matrix with isometric coordinates `u`.
fn integrand(n: usize, u: &[f64]) -> f64 {
    let det = match n {
        3 => {
            let mut m = Matrix3::zeros();
            fill_from_isometric(3, u, |i, j, x| m[(i, j)] = x);
            m.determinant()
        }
        4 => {
            let mut m = Matrix4::zeros();
            fill_from_isometric(4, u, |i, j, x| m[(i, j)] = x);
            m.determinant()
        }
        _ => {
            let mut m = DMatrix::zeros(n, n);
            fill_from_isometric(n, u, |i, j, x| m[(i, j)] = x);
            m.determinant()
        }
    };
    det.abs().powf(-0.5)
}

/// Median-of-means Monte Carlo over the shell, sampled directly: a uniform
/// direction times a radius with density `r^{d-1}` on `[r_in, r_out]`.
fn monte_carlo_shell(n: usize, r_in: f64, r_out: f64, cfg: &EstimatorConfig) -> Result<IntegralEstimate> {
    let d = n * (n + 1) / 2;
    let groups = cfg.groups.max(1);
    let total = cfg.samples_for(n);
    let per_group = (total / groups as u64).max(1);
    let (lo, hi) = (r_in.powi(d as i32), r_out.powi(d as i32));
    let volume = unit_ball_volume(d) * (hi - lo) * 2f64.powf(-((d - n) as f64) / 2.0);
    let means: Vec<f64> = (0..groups as u64)
        .into_par_iter()
        .map(|g| {
            let mut rng = shard_rng(cfg.seed, r_in, r_out, g);
            let mut u = vec![0.0; d];
            let mut acc = 0.0;
            for _ in 0..per_group {
                let mut norm2 = 0.0_f64;
                for x in u.iter_mut() {
                    *x = rng.sample::<f64, _>(StandardNormal);
                    norm2 += *x * *x;
                }
                let r = (lo + rng.random::<f64>() * (hi - lo)).powf(1.0 / d as f64);
                let s = r / norm2.sqrt();
                u.iter_mut().for_each(|x| *x *= s);
                acc += integrand(n, &u);
            }
            volume * acc / per_group as f64
        })
        .collect();
    let mut sorted = means.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
    let mean = means.iter().sum::<f64>() / groups as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (groups.max(2) - 1) as f64;
    Ok(IntegralEstimate {
        value: median,
        std_error: MEDIAN_EFFICIENCY * (var / groups as f64).sqrt(),
        method: Method::MonteCarloMedianOfMeans,
        samples: per_group * groups as u64,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingCheck {
    pub n: usize,
    pub measured: f64,
    pub predicted: f64,
    /// Propagated standard error of `measured` (zero for exact methods).
    pub std_error: f64,
    pub inner: IntegralEstimate,
    pub outer: IntegralEstimate,
    pub pass: bool,
}

pub fn scaling_prediction(n: usize) -> f64 {
    2f64.powf(-((n * n) as f64) / 2.0)
}

/// Ratio of the `[1/4, 1/2]` shell to the `[1/2, 1]` shell against `2^{-n^2/2}`.
pub fn scaling_ratio_test(n: usize, cfg: &EstimatorConfig) -> Result<ScalingCheck> {
    let inner = annulus_integral(n, 0.25, 0.5, cfg)?;
    let outer = annulus_integral(n, 0.5, 1.0, cfg)?;
    let measured = inner.value / outer.value;
    let predicted = scaling_prediction(n);
    let std_error = measured * ((inner.std_error / inner.value).powi(2) + (outer.std_error / outer.value).powi(2)).sqrt();
    let pass = match outer.method {
        Method::MonteCarloMedianOfMeans => (measured - predicted).abs() <= 3.0 * std_error,
        _ => (measured - predicted).abs() <= 1e-6 * predicted,
    };
    Ok(ScalingCheck { n, measured, predicted, std_error, inner, outer, pass })
}

/// `∫_{|A| <= 1}` as the geometric series of dyadic shells.
pub fn ball_integral(n: usize, cfg: &EstimatorConfig) -> Result<IntegralEstimate> {
    let shell = annulus_integral(n, 0.5, 1.0, cfg)?;
    let factor = 1.0 / (1.0 - scaling_prediction(n));
    Ok(IntegralEstimate { value: shell.value * factor, std_error: shell.std_error * factor, ..shell })
}

/// Direct quadrature of the unit-ball integral, without shells.
///
/// At `n = 2` the isometric coordinates `(a, sqrt2 b, c)` rotated to
/// `z1 = (a + c)/sqrt2`, `z2 = (a - c)/sqrt2` give `det = (z1^2 - |z'|^2)/2`;
/// spherical coordinates about the `z1` axis with `x = cos(polar)` reduce the
/// integral to `4 pi ∫_0^1 rho drho ∫_0^1 |2x^2 - 1|^{-1/2} dx`.
pub fn ball_direct_quadrature(n: usize) -> Result<f64> {
    match n {
        1 => {
            Ok(2.0 * root_singular_integral(|a| a.powf(-0.5), 1.0)?)
        }
        2 => {
            // |2x^2 - 1| = 2d(sqrt2 -+ d) at distance d from x = 1/sqrt2
            let inside = root_singular_integral(|d| (2.0 * d * (SQRT_2 - d)).powf(-0.5), FRAC_1_SQRT_2)?;
            let outside = root_singular_integral(|d| (2.0 * d * (SQRT_2 + d)).powf(-0.5), 1.0 - FRAC_1_SQRT_2)?;
            let polar = inside + outside;
            let mut radial = |r: f64| Complex64::new(r, 0.0);
            let (rad, _) = quadrature::adaptive(&mut radial, 0.0, 1.0, 1e-15, 64)?;
            Ok(4.0 * PI * rad.re * polar)
        }
        n => Err(Error::UnsupportedDim { n, max: 2 }),
    }
}

/// Families `A(t)` meeting the cycle at `t*`.
#[derive(Debug, Clone, PartialEq)]
pub enum PathSpec {
    /// `diag(t, 1, ..., 1)`, crossing the top stratum at `t = 0`.
    Sigma1,
    /// `diag(t, t, 1, ..., 1)`, meeting the codimension-three stratum at `t = 0`.
    Sigma2,
    /// `base + t direction`, with distances measured from `t_star`.
    Affine { base: SymmetricForm, direction: SymmetricForm, t_star: f64 },
}

impl PathSpec {
    pub fn t_star(&self) -> f64 {
        match self {
            PathSpec::Affine { t_star, .. } => *t_star,
            _ => 0.0,
        }
    }

    pub fn at(&self, n: usize, t: f64) -> SymmetricForm {
        match self {
            PathSpec::Sigma1 => SymmetricForm::diagonal(&(0..n).map(|i| if i == 0 { t } else { 1.0 }).collect::<Vec<_>>()),
            PathSpec::Sigma2 => SymmetricForm::diagonal(&(0..n).map(|i| if i < 2 { t } else { 1.0 }).collect::<Vec<_>>()),
            PathSpec::Affine { base, direction, .. } => SymmetricForm::from_symmetric(base.matrix() + direction.matrix() * t),
        }
    }
}

pub const DEFAULT_WINDOW: (f64, f64) = (1e-6, 1e-2);
pub const DEFAULT_GROWTH_POINTS: usize = 17;
pub const MIN_GROWTH_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSample {
    pub t: f64,
    pub abs_phi: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: Vec<GrowthSample>,
}

impl GrowthFit {
    pub fn accepts(&self, slope: f64, slope_tol: f64) -> bool {
        (self.slope - slope).abs() <= slope_tol && self.r_squared >= 0.999
    }
}

/// Least-squares fit of `log|phi(A(t))|` against `log|t - t*|` on
/// log-spaced distances in `window`, approaching from above.
pub fn growth_exponent_fit(n: usize, path: &PathSpec, window: (f64, f64), points: usize) -> Result<GrowthFit> {
    let (lo, hi) = window;
    if !(0.0 < lo && lo < hi && hi.is_finite()) || points < 2 {
        return Err(Error::BadWindow(0));
    }
    let t_star = path.t_star();
    let mut samples = Vec::with_capacity(points);
    for i in 0..points {
        let distance = lo * (hi / lo).powf(i as f64 / (points - 1) as f64);
        let t = t_star + distance;
        if let Ok(v) = evaluate_phi(&path.at(n, t), Complex64::new(1.0, 0.0)) {
            samples.push(GrowthSample { t, abs_phi: v.norm(), distance });
        }
    }
    if samples.len() < MIN_GROWTH_POINTS {
        return Err(Error::BadWindow(samples.len()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.distance.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.abs_phi.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 0.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(GrowthFit { slope, intercept, r_squared, window, samples })
}

/// Smooth compactly supported densities on `Sym(n)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TestDensity {
    Zero,
    /// `exp(-1 / (1 - |A - center|^2 / radius^2))` inside the ball, 0 outside.
    Bump { center: SymmetricForm, radius: f64 },
}

impl TestDensity {
    pub fn eval(&self, a: &DMatrix<f64>) -> f64 {
        match self {
            TestDensity::Zero => 0.0,
            TestDensity::Bump { center, radius } => {
                let q = (a - center.matrix()).norm_squared() / (radius * radius);
                if q < 1.0 {
                    (-1.0 / (1.0 - q)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    fn bounding_box(&self, n: usize) -> Option<(DMatrix<f64>, f64)> {
        match self {
            TestDensity::Zero => None,
            TestDensity::Bump { center, radius } => {
                assert_eq!(center.n(), n, "density dimension");
                Some((center.matrix().clone(), *radius))
            }
        }
    }
}

/// Midpoint cells of `[lo, hi]` graded dyadically toward zero: `cells`
/// equal cells on every `[2^{-j-1}, 2^{-j}]` down to `h`, and cells of
/// width at most the dyadic scale elsewhere.
fn graded_cells(lo: f64, hi: f64, h: f64, cells: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let push_range = |a: f64, b: f64, out: &mut Vec<(f64, f64)>| {
        if b <= a {
            return;
        }
        // positive side only; mirror handled by the caller
        let mut top = b;
        while top > a {
            let bottom = (top / 2.0).max(a);
            let w = (top - bottom) / cells as f64;
            for i in 0..cells {
                let x0 = bottom + w * i as f64;
                out.push((x0 + 0.5 * w, w));
            }
            top = bottom;
        }
    };
    // cells covering [max(lo, h), hi] and [lo, -h] by symmetry
    if hi > h {
        push_range(lo.max(h), hi, &mut out);
    }
    if lo < -h {
        let mut neg = Vec::new();
        push_range(h.max(-hi), -lo, &mut neg);
        out.extend(neg.into_iter().map(|(x, w)| (-x, w)));
    }
    out
}

pub const DEFAULT_GRADED_CELLS: usize = 64;

/// `∫ phi(A) rho(A) dA` over cells at distance at least `h` from the cycle,
/// for each `h` in `levels`. At `n = 1` the mesh is graded toward `a = 0`;
/// at `n = 2` it is a uniform midpoint grid of spacing `h` in `(a, b, c)`
/// with cells of smallest eigenvalue modulus below `h` dropped.
pub fn pairing_convergence_test(n: usize, density: &TestDensity, levels: &[f64]) -> Result<Vec<(f64, Complex64)>> {
    if n == 0 || n > 2 {
        return Err(Error::UnsupportedDim { n, max: 2 });
    }
    let Some((center, radius)) = density.bounding_box(n) else {
        return Ok(levels.iter().map(|&h| (h, Complex64::new(0.0, 0.0))).collect());
    };
    let phi = |m: DMatrix<f64>| evaluate_phi(&SymmetricForm::from_symmetric(m), Complex64::new(1.0, 0.0));
    let mut out = Vec::with_capacity(levels.len());
    for &h in levels {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument("mesh sizes must be positive".into()));
        }
        let mut total = Complex64::new(0.0, 0.0);
        if n == 1 {
            let (lo, hi) = (center[(0, 0)] - radius, center[(0, 0)] + radius);
            for (x, w) in graded_cells(lo, hi, h, DEFAULT_GRADED_CELLS) {
                let m = DMatrix::from_element(1, 1, x);
                let rho = density.eval(&m);
                if rho != 0.0 {
                    total += phi(m)? * rho * w;
                }
            }
        } else {
            let axis = |c: f64, r: f64| {
                let k = (2.0 * r / h).ceil() as usize;
                let start = c - r;
                (0..k).map(move |i| start + (i as f64 + 0.5) * h)
            };
            // off-diagonal reach is radius / sqrt2 in Frobenius norm
            let rb = radius * FRAC_1_SQRT_2;
            for a in axis(center[(0, 0)], radius) {
                for b in axis(center[(0, 1)], rb) {
                    for c in axis(center[(1, 1)], radius) {
                        let m = DMatrix::from_row_slice(2, 2, &[a, b, b, c]);
                        let rho = density.eval(&m);
                        if rho == 0.0 {
                            continue;
                        }
                        let mean = 0.5 * (a + c);
                        let disc = (0.25 * (a - c).powi(2) + b * b).sqrt();
                        if (mean.abs() - disc).abs() < h {
                            continue;
                        }
                        total += phi(m)? * rho * h.powi(3);
                    }
                }
            }
        }
        out.push((h, total));
    }
    Ok(out)
}

pub fn default_pairing_levels(n: usize) -> Vec<f64> {
    match n {
        1 => (2..=30).map(|k| 2f64.powi(-k)).collect(),
        _ => vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
    }
}
