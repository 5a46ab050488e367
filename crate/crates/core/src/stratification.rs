//! Maslov-cycle strata `Σ_k = {L : dim(L ∩ L_0) = k}`, their determinantal
//! description in an `L_0`-based chart, and spanning sets of the conormal
//! spaces `(L ∩ L_0) ⊙ (L ∩ L_0)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_TAU};
use crate::symplectic::{chart_coords, intersection_dim, Chart, LagrangianFrame, SymmetricForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StratumLabel {
    pub k: usize,
    pub codim: usize,
}

impl StratumLabel {
    pub fn new(k: usize) -> Self {
        Self { k, codim: codim(k) }
    }

    pub fn on_cycle(&self) -> bool {
        self.k > 0
    }
}

/// Codimension of `Σ_k` in `Λ`.
pub fn codim(k: usize) -> usize {
    k * (k + 1) / 2
}

pub fn stratum_of(l: &LagrangianFrame, l0: &LagrangianFrame) -> Result<StratumLabel> {
    Ok(StratumLabel::new(intersection_dim(l, l0)?))
}

/// Nullity of the chart coordinate; equals the stratum for charts based at `L_0`.
pub fn chart_nullity(l: &LagrangianFrame, chart: &Chart) -> Result<usize> {
    Ok(chart_coords(l, chart)?.nullity(l.tol()))
}

/// Calls `f` on every increasing `m`-subset of `0..n`.
fn for_each_subset(n: usize, m: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == m {
            return f(cur);
        }
        for i in start..n {
            if n - i < m - cur.len() {
                break;
            }
            cur.push(i);
            let keep_going = rec(i + 1, n, m, cur, f);
            cur.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }
    rec(0, n, m, &mut Vec::with_capacity(m), f)
}

/// Whether every `(n-k+1) x (n-k+1)` minor of `A` vanishes, i.e. whether
/// `A` lies in the closure of the nullity-`k` stratum.
///
/// A minor of order `m` counts as zero when `|minor| <= tau * n * ||A||_2^m`.
pub fn minor_test(a: &SymmetricForm, k: usize) -> bool {
    minor_test_with_tol(a, k, DEFAULT_TAU)
}

pub fn minor_test_with_tol(a: &SymmetricForm, k: usize, tau: f64) -> bool {
    let n = a.n();
    assert!(k >= 1 && k <= n, "minor order out of range");
    let m = n - k + 1;
    let scale = linalg::spectral_norm(a.matrix());
    if scale == 0.0 {
        return true;
    }
    let thr = tau * n as f64 * scale.powi(m as i32);
    let mat = a.matrix();
    let mut all_zero = true;
    for_each_subset(n, m, &mut |rows| {
        let rows = rows.to_vec();
        for_each_subset(n, m, &mut |cols| {
            let sub = DMatrix::from_fn(m, m, |i, j| mat[(rows[i], cols[j])]);
            if sub.determinant().abs() > thr {
                all_zero = false;
            }
            all_zero
        })
    });
    all_zero
}

/// An element `-v v^T` of the conormal fibre, with its witness `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConormalElement {
    pub v: DVector<f64>,
    pub tensor: SymmetricForm,
}

impl ConormalElement {
    pub fn new(v: DVector<f64>) -> Self {
        let tensor = SymmetricForm::neg_outer(&v);
        Self { v, tensor }
    }
}

/// `-v_i v_i^T` and `-(v_i + v_j)(v_i + v_j)^T` for an orthonormal basis
/// `{v_i}` of `L ∩ L_0`, in the coordinates of a chart based at `L_0`.
pub fn conormal_spanning_set(l: &LagrangianFrame, l0: &LagrangianFrame, chart: &Chart) -> Result<Vec<ConormalElement>> {
    if !chart.base().same_subspace(l0) {
        return Err(Error::InvalidArgument("chart must be based at L_0".into()));
    }
    let a = chart_coords(l, chart)?;
    let ker = linalg::sym_kernel(a.matrix(), l.tol());
    let k = ker.ncols();
    if k == 0 {
        return Err(Error::EmptyIntersection);
    }
    let basis: Vec<DVector<f64>> = (0..k).map(|i| ker.column(i).into_owned()).collect();
    let mut out: Vec<ConormalElement> = basis.iter().cloned().map(ConormalElement::new).collect();
    for i in 0..k {
        for j in (i + 1)..k {
            out.push(ConormalElement::new(&basis[i] + &basis[j]));
        }
    }
    Ok(out)
}

/// Dimension of the linear span of the given symmetric tensors.
pub fn span_dimension(tensors: &[SymmetricForm]) -> usize {
    let Some(first) = tensors.first() else { return 0 };
    let n = first.n();
    let d = codim(n);
    let mut m = DMatrix::zeros(d, tensors.len());
    for (c, t) in tensors.iter().enumerate() {
        let mut r = 0;
        for i in 0..n {
            for j in i..n {
                m[(r, c)] = t.matrix()[(i, j)];
                r += 1;
            }
        }
    }
    linalg::numerical_rank(&m, DEFAULT_TAU)
}

/// Random orthogonal `n x n` matrix (Gram-Schmidt of a Gaussian matrix).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    linalg::orthonormalize_columns(&g)
}

/// `U^T D U` with exactly `nullity` zero eigenvalues; the others have
/// modulus in `[0.5, 2]` and random sign.
pub fn planted_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize, nullity: usize) -> SymmetricForm {
    assert!(nullity <= n);
    let u = random_orthogonal(rng, n);
    let d: Vec<f64> = (0..n)
        .map(|i| {
            if i < nullity {
                0.0
            } else {
                let mag: f64 = rng.random_range(0.5..2.0);
                if rng.random_bool(0.5) { mag } else { -mag }
            }
        })
        .collect();
    let dm = DMatrix::from_diagonal(&DVector::from_vec(d));
    SymmetricForm::from_symmetric(u.transpose() * dm * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{graph_from_symmetric, make_canonical_space};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn codim_values() {
        assert_eq!(codim(0), 0);
        assert_eq!(codim(1), 1);
        assert_eq!(codim(3), 6);
    }

    #[test]
    fn stratum_examples() {
        let s = make_canonical_space(2).unwrap();
        assert_eq!(stratum_of(&s.l0(), &s.l0()).unwrap().k, 2);
        assert_eq!(stratum_of(&s.q(), &s.l0()).unwrap().k, 0);
        let l = graph_from_symmetric(&SymmetricForm::diagonal(&[1.0, 0.0]), &s.l0_chart());
        let label = stratum_of(&l, &s.l0()).unwrap();
        assert_eq!(label, StratumLabel { k: 1, codim: 1 });
        assert_eq!(chart_nullity(&l, &s.l0_chart()).unwrap(), 1);
    }

    #[test]
    fn minor_examples() {
        assert!(minor_test(&SymmetricForm::zeros(3), 1));
        assert!(minor_test(&SymmetricForm::zeros(3), 3));
        let d = SymmetricForm::diagonal(&[1.0, 0.0]);
        assert!(minor_test(&d, 1));
        assert!(!minor_test(&d, 2));
        assert!(!minor_test(&SymmetricForm::identity(4), 1));
    }

    #[test]
    fn minor_test_matches_planted_nullity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=5 {
            for null in 0..=n {
                let a = planted_symmetric(&mut rng, n, null);
                for k in 1..=n {
                    assert_eq!(minor_test(&a, k), null >= k, "n={n} nullity={null} k={k}");
                }
            }
        }
    }

    #[test]
    fn conormal_examples() {
        let s = make_canonical_space(2).unwrap();
        let chart = s.l0_chart();
        let l = graph_from_symmetric(&SymmetricForm::diagonal(&[1.0, 0.0]), &chart);
        let set = conormal_spanning_set(&l, &s.l0(), &chart).unwrap();
        assert_eq!(set.len(), 1);
        let tensors: Vec<_> = set.iter().map(|e| e.tensor.clone()).collect();
        assert_eq!(span_dimension(&tensors), 1);

        let top = conormal_spanning_set(&s.l0(), &s.l0(), &chart).unwrap();
        let tensors: Vec<_> = top.iter().map(|e| e.tensor.clone()).collect();
        assert_eq!(span_dimension(&tensors), 3);

        let regular = graph_from_symmetric(&SymmetricForm::identity(2), &chart);
        assert_eq!(conormal_spanning_set(&regular, &s.l0(), &chart), Err(Error::EmptyIntersection));
    }
}
