//! The acceptance suite: ten criteria, each run at fixed tolerances and
//! reported with its measured value, expected value, tolerance and runtime.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use crate::conic::{lagrangian_tangency_check, nondegeneracy_check, s_point, DEFAULT_FD_STEP};
use crate::error::Result;
use crate::harness::{
    annulus_integral, ball_integral, growth_exponent_fit, scaling_ratio_test, EstimatorConfig, PathSpec, DEFAULT_GROWTH_POINTS,
    DEFAULT_WINDOW,
};
use crate::linalg::{self, DEFAULT_TAU};
use crate::maslov::{calibration_loop, maslov_index, winding_oracle, UnitaryLoop};
use crate::spinor::{
    apply_sigma, evaluate_phi, fid_order, fresnel_gaussian, fresnel_quadrature_oracle, momentum_spinor, oscillatory_phi_oracle,
    GaussianSpinor, HeisenbergElement, OracleConfig, SPINOR_GRAPH_SIGN,
};
use crate::stratification::{codim, conormal_spanning_set, minor_test, planted_symmetric, span_dimension};
use crate::symplectic::{
    b_matrix, chart_coords, graph_from_symmetric, random_lagrangian_with, transition, transversality, Chart, SymmetricForm, SymplecticSpace,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Check {
    fn within(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (measured - expected).abs() <= tolerance;
        Self { name: name.into(), pass, measured, expected, tolerance }
    }

    fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), pass: measured <= bound, measured, expected: 0.0, tolerance: bound }
    }

    fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), pass: measured >= bound, measured, expected: bound, tolerance: 0.0 }
    }

    /// A count of failures that must be zero.
    fn none_failed(name: impl Into<String>, failures: usize) -> Self {
        Self::at_most(name, failures as f64, 0.0)
    }

    fn badness(&self) -> f64 {
        let dev = (self.measured - self.expected).abs();
        match (self.pass, self.tolerance > 0.0) {
            (false, _) => f64::INFINITY,
            (true, true) => dev / self.tolerance,
            (true, false) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub pass: bool,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub runtime_s: f64,
    pub runtime_limit_s: f64,
    pub n_values: Vec<usize>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl CriterionResult {
    pub fn summary_line(&self) -> String {
        format!(
            "{} {}: measured {:.6e} expected {:.6e} tolerance {:.1e} runtime {:.2}s (limit {}s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.measured,
            self.expected,
            self.tolerance,
            self.runtime_s,
            self.runtime_limit_s
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceConfig {
    pub seed: u64,
    pub n_min: usize,
    pub n_max: usize,
    pub estimator: EstimatorConfig,
    pub oracle: OracleConfig,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        Self { seed: 0, n_min: 1, n_max: 64, estimator: EstimatorConfig::default(), oracle: OracleConfig::default() }
    }
}

impl AcceptanceConfig {
    fn dims(&self, lo: usize, hi: usize) -> Vec<usize> {
        (lo.max(self.n_min)..=hi.min(self.n_max)).collect()
    }

    fn rng(&self, criterion: u64, n: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((criterion << 32) | n as u64);
        rng
    }
}

type Runner = fn(&AcceptanceConfig, &[usize]) -> Result<Vec<Check>>;

struct Criterion {
    id: &'static str,
    dims: (usize, usize),
    limit_s: f64,
    run: Runner,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: "c01_chart_transition", dims: (1, 6), limit_s: 10.0, run: chart_transition },
    Criterion { id: "c02_stratification", dims: (1, 6), limit_s: 30.0, run: stratification },
    Criterion { id: "c03_phase_function", dims: (1, 4), limit_s: 60.0, run: phase_function },
    Criterion { id: "c04_fresnel", dims: (1, 2), limit_s: 60.0, run: fresnel },
    Criterion { id: "c05_annihilation", dims: (1, 4), limit_s: 10.0, run: annihilation },
    Criterion { id: "c06_integrability", dims: (1, 4), limit_s: 300.0, run: integrability },
    Criterion { id: "c07_growth_exponent", dims: (1, 4), limit_s: 10.0, run: growth },
    Criterion { id: "c08_fid_order", dims: (1, 64), limit_s: 1.0, run: fid },
    Criterion { id: "c09_oscillatory_oracle", dims: (1, 2), limit_s: 120.0, run: oscillatory },
    Criterion { id: "c10_maslov_index", dims: (1, 3), limit_s: 60.0, run: maslov },
];

pub fn criterion_ids() -> Vec<&'static str> {
    CRITERIA.iter().map(|c| c.id).collect()
}

/// Runs one criterion; `None` when no dimension of it falls in the
/// configured range.
pub fn run_criterion(id: &str, cfg: &AcceptanceConfig) -> Option<CriterionResult> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let dims = cfg.dims(c.dims.0, c.dims.1);
    if dims.is_empty() {
        return None;
    }
    let start = Instant::now();
    let outcome = (c.run)(cfg, &dims);
    let runtime_s = start.elapsed().as_secs_f64();
    let (checks, error) = match outcome {
        Ok(checks) => (checks, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let worst = checks.iter().max_by(|a, b| a.badness().total_cmp(&b.badness()));
    let (measured, expected, tolerance) = worst.map(|w| (w.measured, w.expected, w.tolerance)).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    let pass = error.is_none() && !checks.is_empty() && checks.iter().all(|c| c.pass) && runtime_s < c.limit_s;
    Some(CriterionResult {
        id: c.id.to_string(),
        pass,
        measured,
        expected,
        tolerance,
        runtime_s,
        runtime_limit_s: c.limit_s,
        n_values: dims,
        checks,
        error,
    })
}

pub fn run_all(cfg: &AcceptanceConfig) -> Vec<CriterionResult> {
    CRITERIA.iter().filter_map(|c| run_criterion(c.id, cfg)).collect()
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Triples with a pair closer than this to meeting are redrawn.
pub const TRIPLE_TRANSVERSALITY: f64 = 1e-3;

fn chart_transition(cfg: &AcceptanceConfig, dims: &[usize]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &n in dims {
        let l0 = SymplecticSpace::canonical(n)?.l0();
        let mut rng = cfg.rng(1, n);
        let (mut coherence, mut inverse) = (0.0_f64, 0.0_f64);
        let mut drawn = 0;
        while drawn < 1000 {
            let l = random_lagrangian_with(&mut rng, n);
            let nc = random_lagrangian_with(&mut rng, n);
            let np = random_lagrangian_with(&mut rng, n);
            let pairs = [(&l, &nc), (&l, &np), (&l0, &nc), (&l0, &np), (&l, &l0)];
            if pairs.iter().any(|(x, y)| transversality(x, y) < TRIPLE_TRANSVERSALITY) {
                continue;
            }
            drawn += 1;
            let chart = Chart::new(l0.clone(), nc)?;
            let moved = chart.with_complement(np.clone())?;
            let a = chart_coords(&l, &chart)?;
            let direct = chart_coords(&l, &moved)?;
            let b = b_matrix(&chart, &np)?;
            coherence = coherence.max(rel_diff(transition(&a, &b)?.matrix(), direct.matrix()));
            // (transition(A, B))^{-1} - A^{-1} - B in max-norm, against 1 + |A^{-1}|
            let a_inv = a.inverse(DEFAULT_TAU)?;
            let residual = direct.inverse(DEFAULT_TAU)?.matrix() - a_inv.matrix() - b.matrix();
            inverse = inverse.max(linalg::max_abs(&residual) / (1.0 + linalg::max_abs(a_inv.matrix())));
        }
        checks.push(Check::at_most(format!("n{n}_transition_coherence"), coherence, 1e-8));
        checks.push(Check::at_most(format!("n{n}_inverse_identity"), inverse, 1e-8));
    }
    Ok(checks)
}

fn stratification(cfg: &AcceptanceConfig, dims: &[usize]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &n in dims {
        let space = SymplecticSpace::canonical(n)?;
        let chart = space.l0_chart();
        let l0 = space.l0();
        let mut rng = cfg.rng(2, n);
        for k in 0..=n {
            let mut disagreements = 0;
            let mut span_failures = 0;
            for i in 0..1000 {
                let a = planted_symmetric(&mut rng, n, k);
                let nullity = a.nullity(DEFAULT_TAU);
                let at_least_k = k == 0 || minor_test(&a, k);
                let not_more = k == n || !minor_test(&a, k + 1);
                if nullity != k || !at_least_k || !not_more {
                    disagreements += 1;
                }
                if k >= 1 && i < 100 {
                    let l = graph_from_symmetric(&a, &chart);
                    let set = conormal_spanning_set(&l, &l0, &chart)?;
                    let tensors: Vec<SymmetricForm> = set.into_iter().map(|e| e.tensor).collect();
                    if span_dimension(&tensors) != codim(k) {
                        span_failures += 1;
                    }
                }
            }
            checks.push(Check::none_failed(format!("n{n}_k{k}_nullity_vs_minors"), disagreements));
            if k >= 1 {
                checks.push(Check::none_failed(format!("n{n}_k{k}_conormal_span"), span_failures));
            }
        }
    }
    Ok(checks)
}

fn kernel_vector<R: Rng>(rng: &mut R, a: &SymmetricForm) -> DVector<f64> {
    let ker = linalg::sym_kernel(a.matrix(), DEFAULT_TAU);
    let c = DVector::from_fn(ker.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    &ker * c
}

fn phase_function(cfg: &AcceptanceConfig, dims: &[usize]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &n in dims {
        let space = SymplecticSpace::canonical(n)?;
        let chart = space.l0_chart();
        let mut rng = cfg.rng(3, n);
        let (mut not_surjective, mut not_two_to_one) = (0, 0);
        for _ in 0..1000 {
            let k = rng.random_range(1..=n);
            let a = planted_symmetric(&mut rng, n, k);
            let v = kernel_vector(&mut rng, &a);
            if !nondegeneracy_check(&a, &v)?.surjective {
                not_surjective += 1;
            }
            if s_point(&a, &v, &chart)? != s_point(&a, &(-&v), &chart)? {
                not_two_to_one += 1;
            }
        }
        checks.push(Check::none_failed(format!("n{n}_nondegeneracy"), not_surjective));
        checks.push(Check::none_failed(format!("n{n}_two_to_one"), not_two_to_one));
        if n == 1 {
            // S(a, x) = -a x^2 maps (0, x) to (0, -x^2)
            let x = 1.3;
            let p = s_point(&SymmetricForm::zeros(1), &DVector::from_element(1, SQRT_2 * x), &chart)?;
            let a = chart_coords(&p.l, &chart)?;
            checks.push(Check::within("n1_example_base", a.matrix()[(0, 0)], 0.0, 1e-15));
            checks.push(Check::within("n1_example_beta", p.beta.matrix()[(0, 0)], -x * x, 1e-14));
        }
        if n == 2 || n == 3 {
            let mut worst = 0.0_f64;
            for _ in 0..20 {
                let a = planted_symmetric(&mut rng, n, 1);
                let v = kernel_vector(&mut rng, &a);
                let p = s_point(&a, &v, &chart)?;
                worst = worst.max(lagrangian_tangency_check(&p, &chart, DEFAULT_FD_STEP)?);
            }
            checks.push(Check::at_most(format!("n{n}_tangency_residual"), worst, 1e-6));
        }
    }
    Ok(checks)
}

fn fresnel(cfg: &AcceptanceConfig, dims: &[usize]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &n in dims {
        let mut rng = cfg.rng(4, n);
        let mut worst = 0.0_f64;
        for _ in 0..50 {
            let a = planted_symmetric(&mut rng, n, 0);
            let exact = fresnel_gaussian(&a)?.value;
            let oracle = fresnel_quadrature_oracle(&a, &cfg.oracle)?.value;
            worst = worst.max((oracle - exact).norm() / exact.norm());
        }
        checks.push(Check::at_most(format!("n{n}_closed_form_vs_quadrature"), worst, 1e-4));
        let (form, target) = match n {
            1 => (SymmetricForm::scalar(1.0), Complex64::from_polar((2.0 * PI).sqrt(), -PI / 4.0)),
            _ => (SymmetricForm::diagonal(&[1.0, -1.0]), Complex64::new(2.0 * PI, 0.0)),
        };
        let closed = fresnel_gaussian(&form)?.value;
        let oracle = fresnel_quadrature_oracle(&form, &cfg.oracle)?.value;
        checks.push(Check::at_most(format!("n{n}_reference_value"), (closed - target).norm() / target.norm(), 1e-14));
        checks.push(Check::at_most(format!("n{n}_reference_value_quadrature"), (oracle - target).norm() / target.norm(), 1e-4));
    }
    Ok(checks)
}

fn annihilation(cfg: &AcceptanceConfig, dims: &[usize]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &n in dims {
        let space = SymplecticSpace::canonical(n)?;
        let mut rng = cfg.rng(5, n);
        let mut worst = 0.0_f64;
        let mut tested = 0;
        while tested < 50 {
            let l = random_lagrangian_with(&mut rng, n);
            // alternate between the two pictures
            let spinor = if tested % 2 == 0 {
                let Ok(b) = chart_coords(&l, &space.q_chart()) else { continue };
                GaussianSpinor::position(b.scaled(SPINOR_GRAPH_SIGN), Complex64::new(1.0, 0.0))
            } else {
                let Ok(a) = chart_coords(&l, &space.l0_chart()) else { continue };
                momentum_spinor(&a, Complex64::new(1.0, 0.0))
            };
            tested += 1;
            let points: Vec<DVector<f64>> =
                (0..100).map(|_| DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))).collect();
            for _ in 0..20 {
                let c = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let u = l.columns() * c;
                let u = HeisenbergElement::from_vector(&(&u / u.norm()));
                worst = worst.max(apply_sigma(&u, &spinor, &points));
            }
        }
        checks.push(Check::at_most(format!("n{n}_sigma_residual"), worst, 1e-10));
    }
    Ok(checks)
}

fn integrability(cfg: &AcceptanceConfig, dims: &[usize]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let est = &cfg.estimator;
    for &n in dims {
        if n == 1 {
            let shell = annulus_integral(1, 0.5, 1.0, est)?.value;
            checks.push(Check::within("n1_annulus", shell, 4.0 - 2.0 * SQRT_2, 1e-12));
            checks.push(Check::within("n1_ball", ball_integral(1, est)?.value, 4.0, 1e-12));
        }
        let s = scaling_ratio_test(n, est)?;
        let tol = if n <= 2 { 1e-6 * s.predicted } else { 3.0 * s.std_error };
        checks.push(Check::within(format!("n{n}_scaling_ratio"), s.measured, s.predicted, tol));
    }
    Ok(checks)
}

fn growth(_cfg: &AcceptanceConfig, dims: &[usize]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &n in dims {
        let fit = growth_exponent_fit(n, &PathSpec::Sigma1, DEFAULT_WINDOW, DEFAULT_GROWTH_POINTS)?;
        checks.push(Check::within(format!("n{n}_sigma1_slope"), fit.slope, -0.5, 0.02));
        checks.push(Check::at_least(format!("n{n}_sigma1_r_squared"), fit.r_squared, 0.999));
        if n >= 2 {
            let fit = growth_exponent_fit(n, &PathSpec::Sigma2, DEFAULT_WINDOW, DEFAULT_GROWTH_POINTS)?;
            checks.push(Check::within(format!("n{n}_sigma2_slope"), fit.slope, -1.0, 0.04));
            checks.push(Check::at_least(format!("n{n}_sigma2_r_squared"), fit.r_squared, 0.999));
        }
    }
    Ok(checks)
}

fn fid(_cfg: &AcceptanceConfig, dims: &[usize]) -> Result<Vec<Check>> {
    let mut failures = 0;
    for &n in dims {
        let o = fid_order(n)?;
        let n = n as i64;
        if !o.holds() || o.m != Ratio::new(-n * (n + 1), 8) {
            failures += 1;
        }
    }
    Ok(vec![Check::none_failed("rational_identity", failures)])
}

fn oscillatory(cfg: &AcceptanceConfig, dims: &[usize]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &n in dims {
        let mut rng = cfg.rng(9, n);
        let mut worst = 0.0_f64;
        for _ in 0..10 {
            let a = planted_symmetric(&mut rng, n, 0);
            let exact = evaluate_phi(&a, Complex64::new(1.0, 0.0))?;
            let oracle = oscillatory_phi_oracle(&a, 1.0, &cfg.oracle)?.value;
            worst = worst.max((oracle - exact).norm() / exact.norm());
        }
        checks.push(Check::at_most(format!("n{n}_oracle_vs_closed_form"), worst, 1e-3));
    }
    Ok(checks)
}

pub const LOOP_SAMPLES: usize = 256;

fn maslov(cfg: &AcceptanceConfig, dims: &[usize]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    if dims.contains(&1) {
        let l0 = SymplecticSpace::canonical(1)?.l0();
        let index = maslov_index(&calibration_loop(LOOP_SAMPLES), &l0)?.index;
        checks.push(Check::within("calibration_abs_index", index.abs() as f64, 1.0, 0.0));
    }
    let (mut mismatches, mut unstable) = (0, 0);
    for i in 0..50u64 {
        let n = dims[i as usize % dims.len()];
        let l0 = SymplecticSpace::canonical(n)?.l0();
        let lp = UnitaryLoop::random(cfg.seed.wrapping_mul(1000).wrapping_add(i), n);
        let path = lp.path(LOOP_SAMPLES);
        let index = maslov_index(&path, &l0)?.index;
        if index.abs() != winding_oracle(&path)?.abs() {
            mismatches += 1;
        }
        if maslov_index(&lp.path(2 * LOOP_SAMPLES), &l0)?.index != index {
            unstable += 1;
        }
    }
    checks.push(Check::none_failed("loops_index_vs_winding", mismatches));
    checks.push(Check::none_failed("loops_doubling_invariance", unstable));
    Ok(checks)
}
