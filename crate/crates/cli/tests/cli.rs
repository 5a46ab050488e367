use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

fn run_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maslov-lab"))
        .args(args)
        .current_dir(fixtures())
        .env("MASLOV_LAB_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_env(args, "1")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn fresnel_of_one_matches_closed_form() {
    let out = run(&["fresnel", "--input", "a_one.txt"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let half = (std::f64::consts::PI).sqrt();
    assert!((doc["value_re"].as_f64().unwrap() - half).abs() < 1e-12);
    assert!((doc["value_im"].as_f64().unwrap() + half).abs() < 1e-12);
    assert_eq!(doc["signature"], 1);
    assert!(doc.get("oracle_value").is_none());
}

#[test]
fn parse_errors_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 2\n2 oops\n").unwrap();
    let out = run(&["fresnel", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2, column 3"), "{}", stderr(&out));
    let missing = run(&["stratify", "--input", "no_such_file.txt"]);
    assert_eq!(missing.status.code(), Some(2));
    let asym = dir.path().join("asym.txt");
    std::fs::write(&asym, "1 2\n3 4\n").unwrap();
    assert_eq!(run(&["fresnel", "--input", asym.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn invalid_arguments_exit_two() {
    assert_eq!(run(&["integrability", "--n", "0"]).status.code(), Some(2));
    assert_eq!(run(&["integrability", "--n", "9"]).status.code(), Some(2));
    assert_eq!(run(&["growth", "--n", "1", "--family", "sigma2"]).status.code(), Some(2));
    assert_eq!(run(&["fresnel", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["report", "--n-min", "3", "--n-max", "2"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run_env(&["fresnel"], "zero").status.code(), Some(2));
}

#[test]
fn verification_failure_exits_one() {
    let out = run(&["fresnel", "--input", "a_one.txt", "--oracle", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    assert_eq!(doc["pass"], false);
    assert!(doc["relative_error"].as_f64().unwrap() > 0.0);
    let out = run(&["phase-check", "--input", "spoint_not_critical.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["critical"], false);
}

#[test]
fn csv_tables_and_out_file() {
    let out = run(&["growth", "--n", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,abs_phi,distance"));
    assert_eq!(lines.count(), 17);
    let summary: Value = serde_json::from_slice(&out.stderr).expect("JSON summary on stderr");
    assert_eq!(summary["pass"], true);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shells.csv");
    let out = run(&["integrability", "--n", "2", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "n,r_in,r_out,value,std_error,method,seed,samples");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("2,0.25,0.5,"));

    let out = run(&["fresnel", "--input", "a_one.txt", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("abs_det,command,n,pass,schema_version,signature,value_im,value_re\n"), "{text}");
}

#[test]
fn integrability_n1_passes_with_inverse_root_two() {
    let doc = json(&run(&["integrability", "--n", "1"]));
    assert_eq!(doc["pass"], true);
    assert!((doc["ratio"].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
}

#[test]
fn monte_carlo_is_reproducible_across_thread_counts() {
    let args = ["integrability", "--n", "3", "--samples", "20000", "--groups", "8", "--seed", "11"];
    let a = json(&run_env(&args, "1"));
    let b = json(&run_env(&args, "3"));
    assert_eq!(a["shells"], b["shells"]);
    assert_eq!(a["shells"][0]["method"], "monte_carlo_median_of_means");
    let c = json(&run_env(&["integrability", "--n", "3", "--samples", "20000", "--groups", "8", "--seed", "12"], "1"));
    assert_ne!(a["shells"], c["shells"]);
}

#[test]
fn report_restricted_to_n1_lists_every_criterion() {
    let out = run(&["report", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["pass"], true);
    let criteria = doc["criteria"].as_object().unwrap();
    assert_eq!(criteria.len(), 10);
    for (id, c) in criteria {
        assert_eq!(c["n_values"], serde_json::json!([1]), "{id}");
        for key in ["pass", "measured", "expected", "tolerance", "runtime_s"] {
            assert!(c.get(key).is_some(), "{id} lacks {key}");
        }
    }
    assert_eq!(stderr(&out).lines().filter(|l| l.starts_with("PASS ")).count(), 10);
}

#[test]
fn report_pass_pattern_is_seed_independent() {
    let pattern = |seed: &str| {
        let doc = json(&run(&["report", "--n", "2", "--seed", seed]));
        doc["criteria"].as_object().unwrap().iter().map(|(k, v)| (k.clone(), v["pass"].clone())).collect::<Vec<_>>()
    };
    let a = pattern("0");
    assert_eq!(a.len(), 10);
    assert_eq!(a, pattern("5"));
}
