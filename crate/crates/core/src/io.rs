//! Text and JSON formats.
//!
//! Matrix files are row-major, whitespace-separated decimals, one row per
//! line; `#` starts a comment. Path files start with `n <int> closed <0|1>`
//! followed by one line per sample: `t` and then the `2n x n` frame entries
//! in row-major order.

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::maslov::GrassmannPath;
use crate::symplectic::{LagrangianFrame, SymmetricForm};

/// Non-comment tokens of a line with their 1-based columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let content = match line.find('#') {
        Some(p) => &line[..p],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in content.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &content[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &content[s..]));
    }
    out.into_iter()
}

fn parse_f64(tok: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse { line, column, msg: format!("expected a number, found `{tok}`") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, column, msg: "non-finite value".into() });
    }
    Ok(v)
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let row: Vec<f64> = tokens(line).map(|(col, t)| parse_f64(t, line_no, col)).collect::<Result<_>>()?;
        if row.is_empty() {
            continue;
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    msg: format!("row has {} entries, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, column: 1, msg: "empty matrix".into() });
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn parse_symmetric(text: &str) -> Result<SymmetricForm> {
    let m = parse_matrix(text)?;
    if m.nrows() != m.ncols() {
        return Err(Error::Parse { line: 1, column: 1, msg: format!("form must be square, got {}x{}", m.nrows(), m.ncols()) });
    }
    require_symmetric(m)
}

/// Rejects matrices that are not symmetric up to `1e-12` relative, naming
/// the first offending entry (1-based row and column).
pub fn require_symmetric(m: DMatrix<f64>) -> Result<SymmetricForm> {
    let scale = 1.0 + crate::linalg::max_abs(&m);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!("matrix is not symmetric at row {}, column {}", i + 1, j + 1)));
            }
        }
    }
    SymmetricForm::new(m)
}

pub fn parse_frame(text: &str) -> Result<LagrangianFrame> {
    let m = parse_matrix(text)?;
    if m.nrows() != 2 * m.ncols() {
        return Err(Error::Parse { line: 1, column: 1, msg: format!("frame must be 2n x n, got {}x{}", m.nrows(), m.ncols()) });
    }
    LagrangianFrame::new(m)
}

pub fn parse_path(text: &str) -> Result<GrassmannPath> {
    let mut header: Option<(usize, bool)> = None;
    let mut samples = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let toks: Vec<(usize, &str)> = tokens(line).collect();
        if toks.is_empty() {
            continue;
        }
        let Some((n, _)) = header else {
            let bad = |column: usize| Error::Parse { line: line_no, column, msg: "expected header `n <int> closed <0|1>`".into() };
            if toks.len() != 4 || toks[0].1 != "n" || toks[2].1 != "closed" {
                return Err(bad(1));
            }
            let n: usize = toks[1].1.parse().map_err(|_| bad(toks[1].0))?;
            if n == 0 {
                return Err(bad(toks[1].0));
            }
            let closed = match toks[3].1 {
                "0" => false,
                "1" => true,
                _ => return Err(bad(toks[3].0)),
            };
            header = Some((n, closed));
            continue;
        };
        let expected = 1 + 2 * n * n;
        if toks.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                column: 1,
                msg: format!("sample line has {} entries, expected {expected}", toks.len()),
            });
        }
        let vals: Vec<f64> = toks.iter().map(|&(c, t)| parse_f64(t, line_no, c)).collect::<Result<_>>()?;
        let m = DMatrix::from_row_slice(2 * n, n, &vals[1..]);
        let frame = LagrangianFrame::new(m).map_err(|e| Error::Parse { line: line_no, column: 1, msg: e.to_string() })?;
        samples.push((vals[0], frame));
    }
    let (_, closed) = header.ok_or(Error::Parse { line: 1, column: 1, msg: "missing header".into() })?;
    GrassmannPath::new(samples, closed)
}

pub fn format_path(path: &GrassmannPath) -> String {
    let mut s = format!("n {} closed {}\n", path.n(), u8::from(path.closed()));
    for (t, f) in path.samples() {
        let m = f.columns();
        let mut parts = vec![format!("{t:e}")];
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                parts.push(format!("{:e}", m[(i, j)]));
            }
        }
        let _ = writeln!(s, "{}", parts.join(" "));
    }
    s
}

pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn serialize_form<S: Serializer>(form: &SymmetricForm, s: S) -> std::result::Result<S::Ok, S::Error> {
    rows_of(form.matrix()).serialize(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maslov::calibration_loop;

    #[test]
    fn asymmetric_forms_are_rejected() {
        let err = parse_symmetric("1 2\n2.5 4\n").unwrap_err();
        assert_eq!(err, Error::InvalidArgument("matrix is not symmetric at row 1, column 2".into()));
        assert!(parse_symmetric("1 2\n2 4\n").is_ok());
    }

    #[test]
    fn matrix_with_comments() {
        let m = parse_matrix("# a form\n1 2\n\n3 4 # trailing\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_matrix("1 2\n3 x\n") {
            Err(Error::Parse { line: 2, column: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_matrix("1 2\n3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_matrix("# nothing\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_symmetric("1 2 3\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn path_round_trip() {
        let p = calibration_loop(9);
        let text = format_path(&p);
        let q = parse_path(&text).unwrap();
        assert_eq!(q.samples().len(), 9);
        assert!(q.closed());
        for ((t0, f0), (t1, f1)) in p.samples().iter().zip(q.samples()) {
            assert_eq!(t0, t1);
            assert!(f0.same_subspace(f1));
        }
    }

    #[test]
    fn path_header_errors() {
        assert!(matches!(parse_path("n 1 open 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_path("n 1 closed 0\n0 1 0 5\n"), Err(Error::Parse { line: 2, .. })));
    }
}
