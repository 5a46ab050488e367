mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Map, Value};

use commands::{Failure, Outcome, Table, SCHEMA_VERSION};
use config::{Cli, OutputFormat, RunConfig};

const THREADS_VAR: &str = "MASLOV_LAB_THREADS";

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

fn with_header(cfg: &RunConfig, doc: Value) -> Value {
    let mut out = Map::new();
    out.insert("schema_version".into(), SCHEMA_VERSION.into());
    out.insert("command".into(), serde_json::to_value(cfg.command).expect("plain enum"));
    match doc {
        Value::Object(m) => out.extend(m),
        other => {
            out.insert("result".into(), other);
        }
    }
    Value::Object(out)
}

/// Scalar top-level fields as a one-row table.
fn scalar_row(doc: &Value) -> (Vec<String>, Vec<String>) {
    let mut header = Vec::new();
    let mut row = Vec::new();
    if let Value::Object(m) = doc {
        for (k, v) in m {
            let cell = match v {
                Value::String(s) => s.clone(),
                Value::Number(_) | Value::Bool(_) | Value::Null => v.to_string(),
                _ => continue,
            };
            header.push(k.clone());
            row.push(cell);
        }
    }
    (header, row)
}

fn csv_text(table: Option<&Table>, doc: &Value) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| e.to_string();
    match table {
        Some(t) => {
            w.write_record(&t.header).map_err(err)?;
            for r in &t.rows {
                w.write_record(r).map_err(err)?;
            }
        }
        None => {
            let (header, row) = scalar_row(doc);
            w.write_record(&header).map_err(err)?;
            w.write_record(&row).map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

fn emit(cfg: &RunConfig, outcome: &Outcome) -> Result<(), String> {
    let doc = with_header(cfg, outcome.doc.clone());
    let json_text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())? + "\n";
    let main = match cfg.output_format {
        OutputFormat::Json => json_text,
        OutputFormat::Csv => {
            if outcome.table.is_some() {
                eprint!("{json_text}");
            }
            csv_text(outcome.table.as_ref(), &doc)?
        }
    };
    match &cfg.out {
        Some(p) => std::fs::write(p, main).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => std::io::stdout().write_all(main.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn main() -> ExitCode {
    let cfg = Cli::parse().into_config();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match commands::run(&cfg) {
        Ok(outcome) => {
            if let Err(e) = emit(&cfg, &outcome) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            let doc = with_header(&cfg, json!({ "pass": false, "error": msg }));
            let _ = emit(&cfg, &Outcome { doc, table: None, pass: false });
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
    }
}
