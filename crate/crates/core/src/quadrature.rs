//! Adaptive Gauss-Kronrod quadrature for complex oscillatory integrands and
//! polynomial extrapolation of damped integrals to zero damping.

use num_complex::Complex64;

use crate::error::{Error, Result};

// 15-point Kronrod nodes/weights on [-1, 1] with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7-K15 panel: Kronrod estimate and `|K15 - G7|`.
pub fn gauss_kronrod_15(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let (v, e, _) = kronrod_panel(f, a, b);
    (v, e)
}

/// Kronrod estimate, error estimate, and the Kronrod integral of `|f|`.
fn kronrod_panel(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (l, r) = (f(c - dx), f(c + dx));
        let s = l + r;
        k += s * WGK[j];
        abs += (l.norm() + r.norm()) * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm(), abs * h.abs())
}

/// Panels whose error estimate is this small relative to the integral of
/// `|f|` are accepted; finer bisection only chases rounding noise.
const ROUNDOFF: f64 = 1e-13;

/// Adaptive bisection until the summed error estimate is below `abs_tol`.
pub fn adaptive(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64, abs_tol: f64, max_panels: usize) -> Result<(Complex64, f64)> {
    let mut stack = vec![(a, b, abs_tol)];
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut panels = 0;
    while let Some((lo, hi, tol)) = stack.pop() {
        panels += 1;
        let (v, e, abs) = kronrod_panel(f, lo, hi);
        let tol = tol.max(ROUNDOFF * abs);
        if e <= tol || panels >= max_panels || (hi - lo) < 1e-13 * (1.0 + lo.abs()) {
            if e > tol && panels >= max_panels {
                return Err(Error::NonConvergent { estimate: e, tol });
            }
            total += v;
            err += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, 0.5 * tol));
            stack.push((lo, mid, 0.5 * tol));
        }
    }
    Ok((total, err))
}

/// Sum of adaptive integrals over consecutive breakpoints, splitting the
/// tolerance evenly.
pub fn over_breakpoints(f: &mut impl FnMut(f64) -> Complex64, points: &[f64], abs_tol: f64) -> Result<(Complex64, f64)> {
    let panels = points.len().saturating_sub(1).max(1) as f64;
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for w in points.windows(2) {
        let (v, e) = adaptive(f, w[0], w[1], abs_tol / panels, 4096)?;
        total += v;
        err += e;
    }
    Ok((total, err))
}

/// `∫_lo^hi e^{-z s} w(s) ds` over `count` equal panels. All panels share
/// the node offsets, so the exponential is evaluated once per panel centre;
/// a panel whose Kronrod-Gauss difference exceeds its share of `abs_tol`
/// is redone adaptively.
pub fn exponential_panels(z: Complex64, w: &impl Fn(f64) -> f64, lo: f64, hi: f64, count: usize, abs_tol: f64) -> Result<Complex64> {
    let count = count.max(1);
    let h = 0.5 * (hi - lo) / count as f64;
    let offsets: Vec<(Complex64, Complex64)> = XGK[..7].iter().map(|&x| ((z * h * x).exp(), (-z * h * x).exp())).collect();
    let share = abs_tol / count as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..count {
        let c = lo + (2 * i + 1) as f64 * h;
        let ec = (-z * c).exp();
        let fc = w(c);
        let mut k = Complex64::new(fc * WGK[7], 0.0);
        let mut g = Complex64::new(fc * WG[3], 0.0);
        for (j, &(left, right)) in offsets.iter().enumerate() {
            let dx = h * XGK[j];
            let s = left * w(c - dx) + right * w(c + dx);
            k += s * WGK[j];
            if j % 2 == 1 {
                g += s * WG[j / 2];
            }
        }
        let (k, g) = (k * ec * h, g * ec * h);
        if (k - g).norm() <= share.max(ROUNDOFF * k.norm()) {
            total += k;
        } else {
            let mut f = |s: f64| (-z * s).exp() * w(s);
            total += adaptive(&mut f, c - h, c + h, share, 4096)?.0;
        }
    }
    Ok(total)
}

/// Breakpoints on `[lo, hi]` such that the phase `alpha * (x - x0)^2 / 2`
/// advances by at most `pi` between consecutive points and no panel is
/// longer than `max_len`.
pub fn quadratic_phase_breakpoints(alpha: f64, x0: f64, lo: f64, hi: f64, max_len: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    let mut x = lo;
    while x < hi {
        let d = (x - x0).abs();
        // local phase rate |alpha| d; step so that the phase change is <= pi
        // distance covered while the phase moves by pi
        let dphi = 2.0 * std::f64::consts::PI / alpha.abs();
        let step_phase = if alpha == 0.0 {
            f64::INFINITY
        } else if x >= x0 {
            (d * d + dphi).sqrt() - d
        } else {
            d - (d * d - dphi).max(0.0).sqrt()
        };
        let step = step_phase.min(max_len).max((hi - lo) * 1e-9);
        x = (x + step).min(hi);
        // land on the stationary point exactly
        if pts.last().map(|&p| p < x0 && x > x0).unwrap_or(false) {
            pts.push(x0);
        }
        pts.push(x);
    }
    pts
}

/// Neville extrapolation of `(x_i, y_i)` to `x = 0`. The error estimate is
/// the difference between the two highest-order extrapolants.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[Complex64]) -> (Complex64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let m = xs.len();
    let mut p: Vec<Complex64> = ys.to_vec();
    let mut prev_top = p[m - 1];
    // after round r, p[i] holds the extrapolant through points i..=i+r
    for r in 1..m {
        for i in 0..(m - r) {
            let (xi, xj) = (xs[i], xs[i + r]);
            p[i] = (p[i + 1] * xi - p[i] * xj) / (xi - xj);
        }
        if r == m - 1 {
            break;
        }
        prev_top = p[m - r - 1];
    }
    if m == 1 {
        return (p[0], f64::INFINITY);
    }
    (p[0], (p[0] - prev_top).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let mut f = |x: f64| Complex64::new(x.powi(5) - 3.0 * x * x, x);
        let (v, _) = gauss_kronrod_15(&mut f, -1.0, 2.0);
        // ∫ x^5 - 3x^2 = [x^6/6 - x^3] ; ∫ x = [x^2/2]
        let re = (64.0 / 6.0 - 8.0) - (1.0 / 6.0 + 1.0);
        assert_relative_eq!(v.re, re, epsilon = 1e-13);
        assert_relative_eq!(v.im, 1.5, epsilon = 1e-13);
    }

    #[test]
    fn oscillatory_damped_gaussian() {
        // ∫_R e^{-(1 + 3i) x^2 / 2} dx = sqrt(2π / (1 + 3i))
        let z = Complex64::new(1.0, 3.0);
        let exact = (Complex64::new(2.0 * std::f64::consts::PI, 0.0) / z).sqrt();
        let pts = quadratic_phase_breakpoints(-3.0, 0.0, -9.0, 9.0, 0.5);
        let mut f = |x: f64| (-z * x * x / 2.0).exp();
        let (v, _) = over_breakpoints(&mut f, &pts, 1e-12).unwrap();
        assert!((v - exact).norm() < 1e-10);
    }

    #[test]
    fn extrapolation_recovers_polynomial() {
        let xs = [0.1, 0.01, 0.001];
        let ys: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(2.0 + 3.0 * x - x * x, -1.0 + x)).collect();
        let (v, _) = extrapolate_to_zero(&xs, &ys);
        assert!((v - Complex64::new(2.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn breakpoints_cover_interval() {
        let pts = quadratic_phase_breakpoints(2.0, 0.3, -5.0, 5.0, 1.0);
        assert_eq!(pts[0], -5.0);
        assert_eq!(*pts.last().unwrap(), 5.0);
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        assert!(pts.contains(&0.3));
    }
}
