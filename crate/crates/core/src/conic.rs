//! The conic lagrangian `S = {(L, -v v^T)}` over the Maslov cycle, realized
//! through the tautological phase `S(A, v) = -A(v, v) / 2` in a chart based
//! at `L_0`.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_TAU};
use crate::symplectic::{chart_coords, graph_from_symmetric, Chart, LagrangianFrame, SymmetricForm};

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Relative singular-value cutoff used to extract the finite-difference
/// tangent basis.
const TANGENT_RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEval {
    pub value: f64,
    pub fibre_grad: DVector<f64>,
    pub base_grad: SymmetricForm,
}

pub fn phase(a: &SymmetricForm, v: &DVector<f64>) -> PhaseEval {
    let av = a.matrix() * v;
    PhaseEval {
        value: -0.5 * v.dot(&av),
        fibre_grad: -av,
        base_grad: SymmetricForm::neg_outer(v).scaled(0.5),
    }
}

pub fn critical_set_test(a: &SymmetricForm, v: &DVector<f64>) -> bool {
    critical_set_test_with_tol(a, v, DEFAULT_TAU * a.n() as f64)
}

/// `v != 0` and `|A v| <= tol |A| |v|`.
pub fn critical_set_test_with_tol(a: &SymmetricForm, v: &DVector<f64>, tol: f64) -> bool {
    let vn = v.norm();
    if vn == 0.0 {
        return false;
    }
    (a.matrix() * v).norm() <= tol * linalg::spectral_norm(a.matrix()) * vn
}

/// Frobenius-orthonormal basis of the symmetric `n x n` matrices.
pub fn symmetric_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = r;
                e[(j, i)] = r;
            }
            out.push(e);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nondegeneracy {
    pub surjective: bool,
    pub singular_values: Vec<f64>,
}

/// Rank of `(dA, dv) -> -A dv - dA v` on `Sym(n) + R^n`.
pub fn nondegeneracy_check(a: &SymmetricForm, v: &DVector<f64>) -> Result<Nondegeneracy> {
    if !critical_set_test(a, v) {
        return Err(Error::NotCritical);
    }
    let n = a.n();
    let basis = symmetric_basis(n);
    let mut map = DMatrix::zeros(n, basis.len() + n);
    for (c, e) in basis.iter().enumerate() {
        map.set_column(c, &(-(e * v)));
    }
    for i in 0..n {
        map.set_column(basis.len() + i, &(-a.matrix().column(i)));
    }
    let singular_values = linalg::singular_values(&map);
    let surjective = linalg::numerical_rank(&map, DEFAULT_TAU) == n;
    Ok(Nondegeneracy { surjective, singular_values })
}

/// A point `(L, beta)` of `S`, with `beta = -w w^T` and `w` in `L ∩ L_0`
/// (coordinates in the chart base basis).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SPoint {
    #[serde(skip)]
    pub l: LagrangianFrame,
    #[serde(rename = "A", serialize_with = "crate::io::serialize_form")]
    pub a: SymmetricForm,
    #[serde(serialize_with = "serialize_vector")]
    pub v: DVector<f64>,
    #[serde(serialize_with = "crate::io::serialize_form")]
    pub beta: SymmetricForm,
}

fn serialize_vector<S: Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    v.as_slice().serialize(s)
}

impl SPoint {
    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("plain data");
        value["n"] = self.n().into();
        value
    }

    /// `s_point` at `(A, v)` for `v = sqrt(2) w`.
    pub fn phase_witness(&self) -> DVector<f64> {
        &self.v * std::f64::consts::SQRT_2
    }
}

/// Image of a critical point `(A, v)`: `(graph(A), -v v^T / 2)`, stored with
/// the witness `w = v / sqrt(2)` so that `beta = -w w^T`. The sign of `w`
/// is normalized, so `(A, v)` and `(A, -v)` give the same point.
pub fn s_point(a: &SymmetricForm, v: &DVector<f64>, chart: &Chart) -> Result<SPoint> {
    if !critical_set_test(a, v) {
        return Err(Error::NotCritical);
    }
    let mut w = v / std::f64::consts::SQRT_2;
    let lead = w.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        w = -w;
    }
    Ok(SPoint {
        l: graph_from_symmetric(a, chart),
        a: a.clone(),
        beta: SymmetricForm::neg_outer(&w),
        v: w,
    })
}

/// `(A, beta)` coordinates of the image of a perturbed critical point,
/// read back through the chart.
fn sampled(a: &DMatrix<f64>, v: &DVector<f64>, chart: &Chart) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    // project onto the forms that annihilate v so the point stays critical
    let u = v / v.norm();
    let p = DMatrix::identity(v.len(), v.len()) - &u * u.transpose();
    let proj = SymmetricForm::new(&p * a * &p)?;
    let point = s_point(&proj, v, chart)?;
    let coords = chart_coords(&point.l, chart)?;
    Ok((coords.into_matrix(), point.beta.into_matrix()))
}

/// Largest `|omega(X_i, X_j)|` over an orthonormal basis of the tangent
/// space to `S` at `p`, where `omega = sum dbeta ^ dA` on `T*Sym(n)` and the
/// tangent vectors come from central differences of `s_point`.
pub fn lagrangian_tangency_check(p: &SPoint, chart: &Chart, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    let n = p.n();
    let d = n * (n + 1) / 2;
    let a = chart_coords(&p.l, chart)?.into_matrix();
    let v = p.phase_witness();
    let mut directions: Vec<(DMatrix<f64>, DVector<f64>)> = symmetric_basis(n).into_iter().map(|e| (e, DVector::zeros(n))).collect();
    for i in 0..n {
        directions.push((DMatrix::zeros(n, n), DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })));
    }
    let width = 2 * n * n;
    let mut tangents = DMatrix::zeros(width, directions.len());
    for (c, (da, dv)) in directions.iter().enumerate() {
        let (ap, bp) = sampled(&(&a + da * h), &(&v + dv * h), chart)?;
        let (am, bm) = sampled(&(&a - da * h), &(&v - dv * h), chart)?;
        let col = (ap - am).iter().chain((bp - bm).iter()).map(|x| x / (2.0 * h)).collect::<Vec<_>>();
        tangents.set_column(c, &DVector::from_vec(col));
    }
    let svd = linalg::svd(&tangents);
    let smax = svd.s[0];
    let rank = svd.s.iter().filter(|&&s| s > TANGENT_RANK_TOL * smax).count();
    if rank != d {
        return Err(Error::DegenerateBasis { rank, expected: d });
    }
    let basis: Vec<DVector<f64>> = (0..d).map(|i| svd.u.column(i).into_owned()).collect();
    let nn = n * n;
    let omega = |x: &DVector<f64>, y: &DVector<f64>| {
        let (xa, xb) = (x.rows(0, nn), x.rows(nn, nn));
        let (ya, yb) = (y.rows(0, nn), y.rows(nn, nn));
        xb.dot(&ya) - yb.dot(&xa)
    };
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in (i + 1)..d {
            worst = worst.max(omega(&basis[i], &basis[j]).abs());
        }
    }
    Ok(worst)
}
