//! Golden-file tests: each case runs the binary on a fixture and compares the
//! JSON document against `tests/golden/<case>.json`. Numbers match to a
//! relative 1e-9; everything else exactly. Set `UPDATE_GOLDEN=1` to rewrite
//! the files.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn dir(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(sub)
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_maslov-lab"))
        .args(args)
        .current_dir(dir("fixtures"))
        .env("MASLOV_LAB_THREADS", "1")
        .output()
        .expect("binary runs");
    let doc = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    });
    (out.status.code().expect("exit code"), doc)
}

fn close(a: &Value, b: &Value, path: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() <= 1e-9 * x.abs().max(y.abs()) + 1e-300 {
                Ok(())
            } else {
                Err(format!("{path}: {x} != {y}"))
            }
        }
        (Value::Array(xs), Value::Array(ys)) if xs.len() == ys.len() => {
            xs.iter().zip(ys).enumerate().try_for_each(|(i, (x, y))| close(x, y, &format!("{path}[{i}]")))
        }
        (Value::Object(xs), Value::Object(ys)) => {
            let keys: Vec<_> = xs.keys().collect();
            if keys != ys.keys().collect::<Vec<_>>() {
                return Err(format!("{path}: keys {:?} != {:?}", keys, ys.keys().collect::<Vec<_>>()));
            }
            xs.iter().try_for_each(|(k, x)| close(x, &ys[k], &format!("{path}.{k}")))
        }
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} != {b}")),
    }
}

fn golden(case: &str, args: &[&str], expected_exit: i32) {
    let (code, doc) = run(args);
    assert_eq!(code, expected_exit, "{case}: exit status, output {doc}");
    assert_eq!(doc["schema_version"], 1);
    let file = dir("golden").join(format!("{case}.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(dir("golden")).unwrap();
        std::fs::write(&file, serde_json::to_string_pretty(&doc).unwrap() + "\n").unwrap();
        return;
    }
    let text = std::fs::read_to_string(&file).unwrap_or_else(|e| panic!("{}: {e}", file.display()));
    let want: Value = serde_json::from_str(&text).unwrap();
    if let Err(msg) = close(&doc, &want, case) {
        panic!("golden mismatch in {msg}");
    }
}

#[test]
fn fresnel_unit_scalar() {
    golden("fresnel_a_one", &["fresnel", "--input", "a_one.txt", "--oracle"], 0);
}

#[test]
fn fresnel_split_signature() {
    golden("fresnel_a_split", &["fresnel", "--input", "a_split.txt"], 0);
}

#[test]
fn stratify_l0_is_top_stratum() {
    golden("stratify_l0_n2", &["stratify", "--input", "l0_n2.txt"], 0);
}

#[test]
fn stratify_sigma1() {
    golden("stratify_sigma1_n2", &["stratify", "--input", "sigma1_n2.txt"], 0);
}

#[test]
fn charts_of_a_graph() {
    golden("charts_graph_n2", &["charts", "--input", "graph_n2.txt"], 0);
}

#[test]
fn maslov_half_turn() {
    golden("maslov_half_turn", &["maslov-index", "--input", "half_turn.path"], 0);
}

#[test]
fn maslov_calibration_loop() {
    golden("maslov_calibration", &["maslov-index"], 0);
}

#[test]
fn phase_check_critical_point() {
    golden("phase_check_n2", &["phase-check", "--input", "spoint_n2.json"], 0);
}

#[test]
fn phase_check_rejects_non_critical() {
    golden("phase_check_not_critical", &["phase-check", "--input", "spoint_not_critical.json"], 1);
}

#[test]
fn phi_sample_split() {
    golden("phi_sample_a_split", &["phi-sample", "--input", "a_split.txt"], 0);
}

#[test]
fn integrability_n1() {
    golden("integrability_n1", &["integrability", "--n", "1"], 0);
}

#[test]
fn integrability_n2() {
    golden("integrability_n2", &["integrability", "--n", "2"], 0);
}

#[test]
fn growth_sigma2() {
    golden("growth_sigma2_n3", &["growth", "--n", "3", "--family", "sigma2"], 0);
}
