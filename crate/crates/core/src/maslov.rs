//! Signed Maslov index of sampled paths in `Λ(n)` relative to `L_0`, and an
//! independent winding-number oracle from the unitary picture
//! `Λ(n) = U(n)/O(n)`.
//!
//! Each stretch of the path between consecutive samples off the cycle is
//! read in one chart based at `L_0`, with the chart coordinate interpolated
//! linearly between samples. Crossings are located by bisection on the
//! signature of the chart coordinate and classified by the crossing form,
//! the restriction of `dA/dt` to `ker A(t*)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;
use crate::stratification::stratum_of;
use crate::symplectic::{
    best_transversal_to, chart_coords, haar_unitary, random_symmetric, Chart, LagrangianFrame, SymmetricForm,
};

/// Global orientation of the index: a simple crossing in which an eigenvalue
/// of the `L_0`-chart coordinate passes from negative to positive counts
/// `MASLOV_SIGN`. With this value the loop `t -> span(cos t e_1 + sin t f_1)`,
/// `t ∈ [0, π]`, has index `+1`, and the index of every loop equals the
/// winding number of `det(U)^2`.
pub const MASLOV_SIGN: i64 = 1;

/// Bisection stops once the bracket is this short (relative to `max(1, |t|)`).
pub const CROSSING_RESOLUTION: f64 = 1e-10;

/// Size of the deterministic perturbation applied when a crossing form is
/// degenerate.
pub const PERTURBATION_SIZE: f64 = 1e-6;

const PERTURBATION_SEED: u64 = 0x6d61_736c;
const PERTURBATION_ATTEMPTS: u64 = 3;
const MAX_BISECTION_DEPTH: usize = 200;
const CHART_QUALITY: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPath {
    samples: Vec<(f64, LagrangianFrame)>,
    closed: bool,
}

impl GrassmannPath {
    pub fn new(samples: Vec<(f64, LagrangianFrame)>, closed: bool) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("path has no samples".into()));
        }
        let n = samples[0].1.n();
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidArgument(format!("t not strictly increasing at t = {}", w[1].0)));
            }
            if w[1].1.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: w[1].1.n() });
            }
        }
        if closed {
            let first = &samples[0].1;
            let last = &samples[samples.len() - 1].1;
            if !first.same_subspace(last) {
                return Err(Error::InvalidArgument("closed path must end where it starts".into()));
            }
        }
        Ok(Self { samples, closed })
    }

    /// Samples `f` at `count` equally spaced parameters on `[t0, t1]`.
    pub fn sample_fn(f: impl Fn(f64) -> LagrangianFrame, t0: f64, t1: f64, count: usize, closed: bool) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidArgument("need at least two samples".into()));
        }
        let samples = (0..count)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / (count - 1) as f64;
                (t, f(t))
            })
            .collect();
        Self::new(samples, closed)
    }

    pub fn samples(&self) -> &[(f64, LagrangianFrame)] {
        &self.samples
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn n(&self) -> usize {
        self.samples[0].1.n()
    }

    /// The loop traversed twice, parameters continued past the end.
    pub fn repeated(&self) -> Result<Self> {
        if !self.closed {
            return Err(Error::InvalidArgument("only closed paths can be repeated".into()));
        }
        let period = self.samples.last().unwrap().0 - self.samples[0].0;
        let mut samples = self.samples.clone();
        samples.extend(self.samples.iter().skip(1).map(|(t, f)| (t + period, f.clone())));
        Self::new(samples, true)
    }

    /// Cyclic rotation of a loop so that it starts at sample `shift`.
    pub fn rotated(&self, shift: usize) -> Result<Self> {
        if !self.closed {
            return Err(Error::InvalidArgument("only closed paths can be rotated".into()));
        }
        let m = self.samples.len() - 1;
        let shift = shift % m;
        let period = self.samples[m].0 - self.samples[0].0;
        let mut samples = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let j = shift + i;
            let (t, f) = if j < m {
                self.samples[j].clone()
            } else {
                let (t, f) = &self.samples[j - m];
                (t + period, f.clone())
            };
            samples.push((t, f));
        }
        Self::new(samples, true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingRecord {
    pub t_star: f64,
    pub k_at_crossing: usize,
    /// `sgn A(t*+) - sgn A(t*-)`.
    pub signature_jump: i64,
    #[serde(serialize_with = "crate::io::serialize_form")]
    pub crossing_form: SymmetricForm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaslovIndex {
    pub index: i64,
    pub crossings: Vec<CrossingRecord>,
}

/// Chart coordinate along one stretch of the path, linear between samples.
struct Stretch {
    ts: Vec<f64>,
    coords: Vec<DMatrix<f64>>,
    perturbation: Option<(f64, DMatrix<f64>)>,
}

impl Stretch {
    fn at(&self, t: f64) -> DMatrix<f64> {
        let last = self.ts.len() - 1;
        let i = match self.ts.iter().position(|&s| s > t) {
            Some(0) => 0,
            Some(p) => p - 1,
            None => last - 1,
        }
        .min(last - 1);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let mut a = &self.coords[i] * (1.0 - s) + &self.coords[i + 1] * s;
        if let Some((eps, p)) = &self.perturbation {
            let (a0, b0) = (self.ts[0], self.ts[last]);
            let bump = 4.0 * (t - a0) * (b0 - t) / ((b0 - a0) * (b0 - a0));
            a += p * (eps * bump);
        }
        a
    }

    fn derivative(&self, t: f64, h: f64) -> DMatrix<f64> {
        (self.at(t + h) - self.at(t - h)) / (2.0 * h)
    }

    fn scale(&self) -> f64 {
        self.coords.iter().map(linalg::spectral_norm).fold(1.0, f64::max)
    }
}

fn sig(a: &DMatrix<f64>) -> Option<i64> {
    let (vals, _) = linalg::sym_eigen(a);
    let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    if vals.iter().any(|v| v.abs() <= 1e-14 * scale) {
        return None;
    }
    Some(vals.iter().map(|v| if *v > 0.0 { 1 } else { -1 }).sum())
}

/// Signature at `t`, nudging `t` inside `(lo, hi)` if it sits exactly on a crossing.
fn sig_near(st: &Stretch, t: f64, lo: f64, hi: f64) -> Option<(f64, i64)> {
    for k in 0..8 {
        let off = (hi - lo) * 1e-3 * k as f64 * if k % 2 == 0 { 1.0 } else { -1.0 };
        let tt = (t + off).clamp(lo, hi);
        if let Some(s) = sig(&st.at(tt)) {
            return Some((tt, s));
        }
    }
    None
}

fn localize(
    st: &Stretch,
    (a, sa): (f64, i64),
    (b, sb): (f64, i64),
    depth: usize,
    out: &mut Vec<CrossingRecord>,
) -> Result<()> {
    if sa == sb {
        return Ok(());
    }
    let mid = 0.5 * (a + b);
    if b - a <= CROSSING_RESOLUTION * mid.abs().max(1.0) {
        out.push(crossing_record(st, mid, sb - sa, b - a));
        return Ok(());
    }
    if depth > MAX_BISECTION_DEPTH {
        return Err(Error::UnresolvedCrossing(mid));
    }
    let (m, sm) = sig_near(st, mid, a, b).ok_or(Error::UnresolvedCrossing(mid))?;
    localize(st, (a, sa), (m, sm), depth + 1, out)?;
    localize(st, (m, sm), (b, sb), depth + 1, out)
}

fn crossing_record(st: &Stretch, t: f64, jump: i64, width: f64) -> CrossingRecord {
    let a = st.at(t);
    let span = st.ts[st.ts.len() - 1] - st.ts[0];
    let h = (span * 1e-6).max(width);
    let da = linalg::symmetrize(&st.derivative(t, h));
    let (vals, vecs) = linalg::sym_eigen(&a);
    let thr = 1e-6 * st.scale().max(linalg::spectral_norm(&da));
    let idx: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() <= thr).collect();
    let mut ker = DMatrix::zeros(a.nrows(), idx.len());
    for (c, &i) in idx.iter().enumerate() {
        ker.set_column(c, &vecs.column(i));
    }
    let form = SymmetricForm::from_symmetric(ker.transpose() * da * &ker);
    CrossingRecord { t_star: t, k_at_crossing: idx.len().max(1), signature_jump: jump, crossing_form: form }
}

fn form_is_degenerate(c: &CrossingRecord) -> bool {
    let m = c.crossing_form.matrix();
    if m.nrows() == 0 {
        return true;
    }
    let (vals, _) = linalg::sym_eigen(m);
    let scale = vals.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    scale == 0.0 || vals.iter().any(|v| v.abs() <= 1e-8 * scale)
}

fn stretch_crossings(st: &mut Stretch, s_start: i64, s_end: i64) -> Result<Vec<CrossingRecord>> {
    let a = st.ts[0];
    let b = *st.ts.last().unwrap();
    let mut out = Vec::new();
    localize(st, (a, s_start), (b, s_end), 0, &mut out)?;
    let mut attempt = 0;
    while out.iter().any(form_is_degenerate) {
        if attempt == PERTURBATION_ATTEMPTS {
            let bad = out.iter().find(|c| form_is_degenerate(c)).unwrap();
            return Err(Error::UnresolvedCrossing(bad.t_star));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(PERTURBATION_SEED + attempt);
        let p = random_symmetric(&mut rng, st.coords[0].nrows()).into_matrix();
        st.perturbation = Some((PERTURBATION_SIZE * st.scale(), p));
        out.clear();
        localize(st, (a, s_start), (b, s_end), 0, &mut out)?;
        attempt += 1;
    }
    Ok(out)
}

/// Maslov index of `path` relative to `l0` with the crossings found.
pub fn maslov_index(path: &GrassmannPath, l0: &LagrangianFrame) -> Result<MaslovIndex> {
    let samples = &path.samples;
    let strata: Vec<usize> = samples.iter().map(|(_, f)| stratum_of(f, l0).map(|s| s.k)).collect::<Result<_>>()?;
    let last = samples.len() - 1;
    if samples.len() == 1 {
        if !path.closed && strata[0] > 0 {
            return Err(Error::EndpointOnCycle(strata[0]));
        }
        return Ok(MaslovIndex { index: 0, crossings: Vec::new() });
    }
    // (parameter, sample index) in visiting order
    let fixed: Vec<(f64, usize)> = if path.closed {
        let period = samples[last].0 - samples[0].0;
        // start the loop at a sample off the cycle; samples[last] repeats samples[0]
        let s = strata.iter().position(|&k| k == 0).ok_or(Error::EndpointOnCycle(strata[0]))?;
        if s == 0 || s == last {
            (0..=last).map(|i| (samples[i].0, i)).collect()
        } else {
            (s..=last)
                .map(|i| (samples[i].0, i))
                .chain((1..=s).map(|i| (samples[i].0 + period, i)))
                .collect()
        }
    } else {
        if strata[0] > 0 {
            return Err(Error::EndpointOnCycle(strata[0]));
        }
        if strata[last] > 0 {
            return Err(Error::EndpointOnCycle(strata[last]));
        }
        (0..=last).map(|i| (samples[i].0, i)).collect()
    };

    let mut index = 0_i64;
    let mut crossings = Vec::new();
    let mut start = 0;
    while start + 1 < fixed.len() {
        let mut end = start + 1;
        while strata[fixed[end].1] > 0 {
            end += 1;
        }
        let frames: Vec<&LagrangianFrame> =
            std::iter::once(l0).chain(fixed[start..=end].iter().map(|&(_, i)| &samples[i].1)).collect();
        let complement = best_transversal_to(&frames, CHART_QUALITY)?;
        let chart = Chart::new(l0.clone(), complement)?;
        let coords = fixed[start..=end]
            .iter()
            .map(|&(_, i)| chart_coords(&samples[i].1, &chart).map(SymmetricForm::into_matrix))
            .collect::<Result<Vec<_>>>()?;
        let mut st = Stretch { ts: fixed[start..=end].iter().map(|p| p.0).collect(), coords, perturbation: None };
        let s0 = sig(&st.coords[0]).ok_or(Error::EndpointOnCycle(1))?;
        let s1 = sig(st.coords.last().unwrap()).ok_or(Error::EndpointOnCycle(1))?;
        if s0 != s1 {
            let found = stretch_crossings(&mut st, s0, s1)?;
            debug_assert_eq!(found.iter().map(|c| c.signature_jump).sum::<i64>(), s1 - s0);
            crossings.extend(found);
        }
        index += (s1 - s0) / 2;
        start = end;
    }
    Ok(MaslovIndex { index: MASLOV_SIGN * index, crossings })
}

/// Winding number of `t -> det(U(t))^2` around a loop, where `U = X + iY`
/// is the unitary of the orthonormal frame `[X; Y]`.
pub fn winding_oracle(path: &GrassmannPath) -> Result<i64> {
    if !path.closed {
        return Err(Error::InvalidArgument("winding oracle needs a closed path".into()));
    }
    let phases: Vec<f64> = path.samples.iter().map(|(_, f)| det_squared(f).arg()).collect();
    let mut total = 0.0;
    for (k, w) in phases.windows(2).enumerate() {
        let mut d = w[1] - w[0];
        while d > PI {
            d -= 2.0 * PI;
        }
        while d <= -PI {
            d += 2.0 * PI;
        }
        if d.abs() > PI / 2.0 {
            return Err(Error::LiftFailure(k, k + 1));
        }
        total += d;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

fn det_squared(f: &LagrangianFrame) -> Complex64 {
    let d = f.unitary().determinant();
    d * d
}

/// `t -> span(cos t e_1 + sin t f_1)` on `[0, π]`, sampled at `count` points.
pub fn calibration_loop(count: usize) -> GrassmannPath {
    GrassmannPath::sample_fn(
        |t| LagrangianFrame::new(DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()])).expect("unit vector"),
        0.0,
        PI,
        count,
        true,
    )
    .expect("valid calibration loop")
}

/// Parameters of a seeded test loop `U(t) = V exp(i sin(t) S) diag(e^{i m_j t / 2})`
/// on `[0, 2π]`, whose `det^2` winds `sum m_j` times.
#[derive(Debug, Clone)]
pub struct UnitaryLoop {
    v: DMatrix<Complex64>,
    s_vecs: DMatrix<f64>,
    s_vals: DVector<f64>,
    pub windings: Vec<i64>,
}

impl UnitaryLoop {
    pub fn random(seed: u64, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = haar_unitary(&mut rng, n);
        let s = random_symmetric(&mut rng, n).scaled(0.5);
        let (s_vals, s_vecs) = linalg::sym_eigen(s.matrix());
        let windings = (0..n).map(|_| rng.random_range(-2..=2)).collect();
        Self { v, s_vecs, s_vals, windings }
    }

    pub fn frame(&self, t: f64) -> LagrangianFrame {
        let n = self.windings.len();
        let p = self.s_vecs.map(|x| Complex64::new(x, 0.0));
        let e = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| Complex64::from_polar(1.0, t.sin() * self.s_vals[i])));
        let w = &p * e * p.adjoint();
        let d = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| {
            Complex64::from_polar(1.0, self.windings[i] as f64 * t / 2.0)
        }));
        LagrangianFrame::from_unitary(&(&self.v * w * d))
    }

    pub fn expected_winding(&self) -> i64 {
        self.windings.iter().sum()
    }

    pub fn path(&self, count: usize) -> GrassmannPath {
        GrassmannPath::sample_fn(|t| self.frame(t), 0.0, 2.0 * PI, count, true).expect("valid loop")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::make_canonical_space;

    #[test]
    fn sign_constant_is_pinned() {
        assert_eq!(MASLOV_SIGN, 1);
        let s = make_canonical_space(1).unwrap();
        let res = maslov_index(&calibration_loop(64), &s.l0()).unwrap();
        assert_eq!(res.index, 1);
    }

    #[test]
    fn constant_path_has_no_crossings() {
        let s = make_canonical_space(2).unwrap();
        let f = s.q();
        let p = GrassmannPath::new(vec![(0.0, f.clone()), (1.0, f.clone()), (2.0, f)], true).unwrap();
        let r = maslov_index(&p, &s.l0()).unwrap();
        assert_eq!(r.index, 0);
        assert!(r.crossings.is_empty());
        assert_eq!(winding_oracle(&p).unwrap(), 0);
    }

    #[test]
    fn calibration_loop_single_crossing() {
        let s = make_canonical_space(1).unwrap();
        let r = maslov_index(&calibration_loop(101), &s.l0()).unwrap();
        assert_eq!(r.index.abs(), 1);
        assert_eq!(r.crossings.len(), 1);
        let c = &r.crossings[0];
        assert!((c.t_star - PI / 2.0).abs() < 1e-6);
        assert_eq!(c.k_at_crossing, 1);
        assert_eq!(c.signature_jump, 2);
        assert!(c.crossing_form.matrix()[(0, 0)] > 0.0);
        assert_eq!(winding_oracle(&calibration_loop(101)).unwrap(), 1);
    }

    #[test]
    fn doubling_the_loop_doubles_the_index() {
        let s = make_canonical_space(1).unwrap();
        let twice = calibration_loop(50).repeated().unwrap();
        assert_eq!(maslov_index(&twice, &s.l0()).unwrap().index, 2);
        assert_eq!(winding_oracle(&twice).unwrap(), 2);
    }

    #[test]
    fn open_path_endpoint_on_cycle_rejected() {
        let s = make_canonical_space(1).unwrap();
        let p = GrassmannPath::new(vec![(0.0, s.q()), (1.0, s.l0())], false).unwrap();
        assert_eq!(maslov_index(&p, &s.l0()), Err(Error::EndpointOnCycle(1)));
    }

    #[test]
    fn path_validation() {
        let s = make_canonical_space(1).unwrap();
        assert!(GrassmannPath::new(vec![(1.0, s.q()), (0.0, s.q())], false).is_err());
        assert!(GrassmannPath::new(vec![(0.0, s.q()), (1.0, s.l0())], true).is_err());
        assert!(winding_oracle(&GrassmannPath::new(vec![(0.0, s.q())], false).unwrap()).is_err());
    }

    #[test]
    fn coarse_sampling_fails_the_lift() {
        let p = calibration_loop(3);
        assert!(matches!(winding_oracle(&p), Err(Error::LiftFailure(_, _))));
    }

    #[test]
    fn rotation_invariance() {
        let s = make_canonical_space(2).unwrap();
        let lp = UnitaryLoop::random(9, 2);
        let p = lp.path(120);
        let base = maslov_index(&p, &s.l0()).unwrap().index;
        assert_eq!(base, lp.expected_winding());
        for shift in [1, 17, 60, 119] {
            assert_eq!(maslov_index(&p.rotated(shift).unwrap(), &s.l0()).unwrap().index, base);
        }
    }

    #[test]
    fn loop_through_deeper_stratum() {
        // L(t) = span(cos t e_i + sin t f_i) for i = 1, 2 simultaneously
        // passes through L_0 itself (k = 2) at t = π/2.
        let s = make_canonical_space(2).unwrap();
        let p = GrassmannPath::sample_fn(
            |t| {
                let (c, sn) = (t.cos(), t.sin());
                LagrangianFrame::new(DMatrix::from_row_slice(4, 2, &[c, 0.0, 0.0, c, sn, 0.0, 0.0, sn])).unwrap()
            },
            0.0,
            PI,
            41,
            true,
        )
        .unwrap();
        let r = maslov_index(&p, &s.l0()).unwrap();
        assert_eq!(r.index, 2);
        assert_eq!(winding_oracle(&p).unwrap(), 2);
        for c in &r.crossings {
            assert!(c.signature_jump.abs() <= 2 * c.k_at_crossing as i64);
        }
    }
}
