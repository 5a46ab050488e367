use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use maslov_lab::acceptance::{criterion_ids, run_all, run_criterion, AcceptanceConfig};
use maslov_lab::conic::{lagrangian_tangency_check, nondegeneracy_check, s_point, DEFAULT_FD_STEP};
use maslov_lab::harness::{annulus_integral, growth_exponent_fit, scaling_ratio_test, PathSpec, DEFAULT_GROWTH_POINTS, DEFAULT_WINDOW};
use maslov_lab::io::{parse_frame, parse_path, parse_symmetric, require_symmetric, rows_of};
use maslov_lab::linalg;
use maslov_lab::maslov::{calibration_loop, maslov_index, winding_oracle};
use maslov_lab::spinor::{evaluate_phi, fresnel_gaussian, fresnel_quadrature_oracle, oscillatory_phi_oracle};
use maslov_lab::stratification::{conormal_spanning_set, planted_symmetric, span_dimension, stratum_of};
use maslov_lab::symplectic::{chart_coords, find_common_transversal, random_lagrangian, Chart, SymmetricForm, SymplecticSpace};
use maslov_lab::Error;

use crate::config::{Command, GrowthFamily, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// What a command produced: a JSON document, optionally a table, and the
/// verification verdict.
#[derive(Debug)]
pub struct Outcome {
    pub doc: Value,
    pub table: Option<Table>,
    pub pass: bool,
}

#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad input: unreadable file, parse error, invalid argument.
    Input(String),
    /// A computation that should have succeeded did not.
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::InvalidArgument(_)
            | Error::InvalidDimension(_)
            | Error::DimensionMismatch { .. }
            | Error::NotLagrangian(_)
            | Error::UnsupportedDim { .. }
            | Error::SingularForm(_) => Failure::Input(e.to_string()),
            _ => Failure::Verification(e.to_string()),
        }
    }
}

type CmdResult = Result<Outcome, Failure>;

pub fn run(cfg: &RunConfig) -> CmdResult {
    if cfg.n == 0 {
        return Err(Failure::Input("--n must be at least 1".into()));
    }
    if let Some(t) = cfg.tol {
        if !(t >= 0.0) {
            return Err(Failure::Input("--tol must be non-negative".into()));
        }
    }
    match cfg.command {
        Command::Stratify => stratify(cfg),
        Command::Charts => charts(cfg),
        Command::MaslovIndex => maslov(cfg),
        Command::PhaseCheck => phase_check(cfg),
        Command::Fresnel => fresnel(cfg),
        Command::PhiSample => phi_sample(cfg),
        Command::Integrability => integrability(cfg),
        Command::Growth => growth(cfg),
        Command::Report => report(cfg),
    }
}

fn read_input(cfg: &RunConfig) -> Result<Option<String>, Failure> {
    match &cfg.input_path {
        None => Ok(None),
        Some(p) => std::fs::read_to_string(p)
            .map(Some)
            .map_err(|e| Failure::Input(format!("cannot read {}: {e}", p.display()))),
    }
}

fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn stratify(cfg: &RunConfig) -> CmdResult {
    let l = match read_input(cfg)? {
        Some(text) => parse_frame(&text)?,
        None => random_lagrangian(cfg.seed, &SymplecticSpace::canonical(cfg.n)?),
    };
    let n = l.n();
    let l0 = SymplecticSpace::canonical(n)?.l0();
    let label = stratum_of(&l, &l0)?;
    let conormal = if label.on_cycle() {
        let chart = Chart::new(l0.clone(), find_common_transversal(&l, &l0)?)?;
        let set = conormal_spanning_set(&l, &l0, &chart)?;
        let tensors: Vec<SymmetricForm> = set.iter().map(|c| c.tensor.clone()).collect();
        Some(span_dimension(&tensors))
    } else {
        None
    };
    let pass = conormal.is_none_or(|d| d == label.codim);
    Ok(Outcome {
        doc: json!({
            "n": n,
            "k": label.k,
            "codim": label.codim,
            "on_cycle": label.on_cycle(),
            "conormal_span_dim": conormal,
            "pass": pass,
        }),
        table: None,
        pass,
    })
}

fn charts(cfg: &RunConfig) -> CmdResult {
    if let Some(text) = read_input(cfg)? {
        let l = parse_frame(&text)?;
        let space = SymplecticSpace::canonical(l.n())?;
        let mut chart = space.l0_chart();
        let mut canonical = true;
        if chart_coords(&l, &chart).is_err() {
            chart = chart.with_complement(find_common_transversal(&l, &space.l0())?)?;
            canonical = false;
        }
        let a = chart_coords(&l, &chart)?;
        return Ok(Outcome {
            doc: json!({
                "n": l.n(),
                "canonical_complement": canonical,
                "complement": rows_of(chart.complement().columns()),
                "A": rows_of(a.matrix()),
                "pass": true,
            }),
            table: None,
            pass: true,
        });
    }
    let acfg = AcceptanceConfig { seed: cfg.seed, n_min: cfg.n, n_max: cfg.n, ..AcceptanceConfig::default() };
    let r = run_criterion("c01_chart_transition", &acfg)
        .ok_or_else(|| Failure::Input(format!("transition check covers n <= 6, got {}", cfg.n)))?;
    let tol = cfg.tol_or(1e-8);
    let pass = r.error.is_none() && r.checks.iter().all(|c| c.measured <= tol);
    Ok(Outcome {
        doc: json!({
            "n": cfg.n,
            "seed": cfg.seed,
            "tol": tol,
            "checks": r.checks.iter().map(|c| json!({ "name": c.name, "measured": c.measured })).collect::<Vec<_>>(),
            "error": r.error,
            "pass": pass,
        }),
        table: None,
        pass,
    })
}

fn maslov(cfg: &RunConfig) -> CmdResult {
    let path = match read_input(cfg)? {
        Some(text) => parse_path(&text)?,
        None => calibration_loop(256),
    };
    let l0 = SymplecticSpace::canonical(path.n())?.l0();
    let index = maslov_index(&path, &l0)?;
    let winding = if path.closed() { Some(winding_oracle(&path)?) } else { None };
    let pass = winding.is_none_or(|w| w == index.index);
    let crossings: Vec<Value> = index
        .crossings
        .iter()
        .map(|c| json!({ "t_star": c.t_star, "k_at_crossing": c.k_at_crossing, "signature_jump": c.signature_jump }))
        .collect();
    let table = Table {
        header: vec!["t_star", "k_at_crossing", "signature_jump"],
        rows: index
            .crossings
            .iter()
            .map(|c| vec![c.t_star.to_string(), c.k_at_crossing.to_string(), c.signature_jump.to_string()])
            .collect(),
    };
    Ok(Outcome {
        doc: json!({
            "n": path.n(),
            "closed": path.closed(),
            "index": index.index,
            "winding": winding,
            "crossings": crossings,
            "pass": pass,
        }),
        table: Some(table),
        pass,
    })
}

/// JSON form of an S-point.
#[derive(Debug, Deserialize)]
struct SPointInput {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    v: Vec<f64>,
    beta: Vec<Vec<f64>>,
}

fn square(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>, Failure> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Failure::Input(format!("{what} must be {n} x {n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn phase_check(cfg: &RunConfig) -> CmdResult {
    let text = read_input(cfg)?.ok_or_else(|| Failure::Input("phase-check needs --input with an S-point JSON".into()))?;
    let input: SPointInput = serde_json::from_str(&text).map_err(|e| {
        Failure::Input(format!("parse error at line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let n = input.n;
    if n == 0 || input.v.len() != n {
        return Err(Failure::Input(format!("v must have {n} entries")));
    }
    let a = require_symmetric(square(&input.a, n, "A")?)?;
    let beta = square(&input.beta, n, "beta")?;
    let w = DVector::from_vec(input.v);
    let chart = SymplecticSpace::canonical(n)?.l0_chart();
    let tol = cfg.tol_or(1e-6);
    let beta_residual = linalg::max_abs(&(&beta + &w * w.transpose()));
    let phase_v = &w * SQRT_2;
    let point = s_point(&a, &phase_v, &chart);
    let critical = point.is_ok();
    let (surjective, two_to_one, tangency) = match &point {
        Ok(p) => {
            let surjective = nondegeneracy_check(&a, &phase_v)?.surjective;
            let two_to_one = s_point(&a, &(-&phase_v), &chart)? == *p;
            let tangency = if n >= 2 { Some(lagrangian_tangency_check(p, &chart, DEFAULT_FD_STEP)?) } else { None };
            (surjective, two_to_one, tangency)
        }
        Err(_) => (false, false, None),
    };
    let beta_ok = beta_residual <= 1e-12 * (1.0 + w.norm_squared());
    let pass = critical && beta_ok && surjective && two_to_one && tangency.is_none_or(|r| r <= tol);
    Ok(Outcome {
        doc: json!({
            "n": n,
            "critical": critical,
            "beta_residual": beta_residual,
            "surjective": surjective,
            "two_to_one": two_to_one,
            "tangency_residual": tangency,
            "tol": tol,
            "pass": pass,
        }),
        table: None,
        pass,
    })
}

fn input_form(cfg: &RunConfig) -> Result<Option<SymmetricForm>, Failure> {
    Ok(match read_input(cfg)? {
        Some(text) => Some(parse_symmetric(&text)?),
        None => None,
    })
}

fn fresnel(cfg: &RunConfig) -> CmdResult {
    let a = input_form(cfg)?.unwrap_or_else(|| SymmetricForm::identity(cfg.n));
    let closed = fresnel_gaussian(&a)?;
    let mut doc = json!({
        "n": a.n(),
        "value_re": closed.value.re,
        "value_im": closed.value.im,
        "abs_det": closed.abs_det,
        "signature": closed.signature,
    });
    let mut pass = true;
    if cfg.oracle {
        let tol = cfg.tol_or(1e-4);
        let o = fresnel_quadrature_oracle(&a, &cfg.oracle_config())?;
        let rel = (o.value - closed.value).norm() / closed.value.norm();
        pass = rel <= tol;
        doc["oracle_value"] = complex(o.value);
        doc["oracle_error"] = o.error.into();
        doc["relative_error"] = rel.into();
        doc["tol"] = tol.into();
    }
    doc["pass"] = pass.into();
    Ok(Outcome { doc, table: None, pass })
}

fn phi_sample(cfg: &RunConfig) -> CmdResult {
    let a = match input_form(cfg)? {
        Some(a) => a,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            planted_symmetric(&mut rng, cfg.n, 0)
        }
    };
    let n = a.n();
    let phi = evaluate_phi(&a, Complex64::new(1.0, 0.0))?;
    let mut doc = json!({ "n": n, "A": rows_of(a.matrix()), "phi": complex(phi) });
    let mut pass = true;
    if n <= 2 {
        let tol = cfg.tol_or(1e-3);
        let o = oscillatory_phi_oracle(&a, 1.0, &cfg.oracle_config())?;
        let rel = (o.value - phi).norm() / phi.norm();
        pass = rel <= tol;
        doc["oracle_value"] = complex(o.value);
        doc["oracle_error"] = o.error.into();
        doc["relative_error"] = rel.into();
        doc["tol"] = tol.into();
    }
    doc["pass"] = pass.into();
    Ok(Outcome { doc, table: None, pass })
}

fn integrability(cfg: &RunConfig) -> CmdResult {
    let n = cfg.n;
    let est = cfg.estimator();
    let check = scaling_ratio_test(n, &est)?;
    let mut table = Table { header: vec!["n", "r_in", "r_out", "value", "std_error", "method", "seed", "samples"], rows: Vec::new() };
    let mut shells = Vec::new();
    for (r_in, r_out, e) in [(0.25, 0.5, check.inner), (0.5, 1.0, check.outer)] {
        let method = serde_json::to_value(e.method).expect("plain enum");
        let method = method.as_str().unwrap_or_default().to_string();
        table.rows.push(vec![
            n.to_string(),
            r_in.to_string(),
            r_out.to_string(),
            e.value.to_string(),
            e.std_error.to_string(),
            method.clone(),
            e.seed.to_string(),
            e.samples.to_string(),
        ]);
        shells.push(json!({
            "r_in": r_in, "r_out": r_out, "value": e.value, "std_error": e.std_error,
            "method": method, "seed": e.seed, "samples": e.samples,
        }));
    }
    let mut doc = json!({
        "n": n,
        "ratio": check.measured,
        "predicted": check.predicted,
        "ratio_std_error": check.std_error,
        "shells": shells,
    });
    let mut pass = check.pass;
    if n == 1 {
        let annulus = annulus_integral(1, 0.5, 1.0, &est)?.value;
        let exact = 4.0 - 2.0 * SQRT_2;
        let ok = (annulus - exact).abs() <= cfg.tol_or(1e-12);
        doc["unit_annulus"] = json!({ "value": annulus, "expected": exact, "pass": ok });
        pass &= ok;
    }
    doc["pass"] = pass.into();
    Ok(Outcome { doc, table: Some(table), pass })
}

fn growth(cfg: &RunConfig) -> CmdResult {
    let n = cfg.n;
    let (spec, slope, default_tol) = match cfg.family {
        GrowthFamily::Sigma1 => (PathSpec::Sigma1, -0.5, 0.02),
        GrowthFamily::Sigma2 => (PathSpec::Sigma2, -1.0, 0.04),
    };
    if cfg.family == GrowthFamily::Sigma2 && n < 2 {
        return Err(Failure::Input("the sigma2 family needs n >= 2".into()));
    }
    let tol = cfg.tol_or(default_tol);
    let fit = growth_exponent_fit(n, &spec, DEFAULT_WINDOW, DEFAULT_GROWTH_POINTS)?;
    let pass = fit.accepts(slope, tol);
    let table = Table {
        header: vec!["t", "abs_phi", "distance"],
        rows: fit.samples.iter().map(|s| vec![s.t.to_string(), s.abs_phi.to_string(), s.distance.to_string()]).collect(),
    };
    Ok(Outcome {
        doc: json!({
            "n": n,
            "family": cfg.family,
            "slope": fit.slope,
            "expected_slope": slope,
            "tol": tol,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "window": [fit.window.0, fit.window.1],
            "samples": fit.samples,
            "pass": pass,
        }),
        table: Some(table),
        pass,
    })
}

fn report(cfg: &RunConfig) -> CmdResult {
    let (n_min, n_max) = cfg.n_range.unwrap_or((1, 64));
    if n_min == 0 || n_min > n_max {
        return Err(Failure::Input(format!("empty n-range {n_min}..={n_max}")));
    }
    let acfg = AcceptanceConfig {
        seed: cfg.seed,
        n_min,
        n_max,
        estimator: cfg.estimator(),
        oracle: cfg.oracle_config(),
    };
    let results = run_all(&acfg);
    let pass = results.iter().all(|r| r.pass);
    let mut criteria = BTreeMap::new();
    let mut table = Table {
        header: vec!["id", "pass", "measured", "expected", "tolerance", "runtime_s", "runtime_limit_s"],
        rows: Vec::new(),
    };
    for r in &results {
        eprintln!("{}", r.summary_line());
        table.rows.push(vec![
            r.id.clone(),
            r.pass.to_string(),
            r.measured.to_string(),
            r.expected.to_string(),
            r.tolerance.to_string(),
            r.runtime_s.to_string(),
            r.runtime_limit_s.to_string(),
        ]);
        criteria.insert(r.id.clone(), serde_json::to_value(r).expect("plain data"));
    }
    let skipped: Vec<&str> = criterion_ids().into_iter().filter(|id| !criteria.contains_key(*id)).collect();
    Ok(Outcome {
        doc: json!({
            "seed": cfg.seed,
            "n_range": [n_min, n_max],
            "criteria": criteria,
            "skipped": skipped,
            "pass": pass,
        }),
        table: Some(table),
        pass,
    })
}
