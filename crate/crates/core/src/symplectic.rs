//! Symplectic vector spaces, lagrangian frames, and the chart atlas of the
//! lagrangian grassmannian.
//!
//! Everything is expressed in the canonical basis `(e_1..e_n, f_1..f_n)` of
//! `R^{2n}` with `omega(e_i, f_j) = delta_ij`, i.e. `omega(u, w) = u^T J w`
//! for `J = [[0, I], [-I, 0]]`. `Q = span(e)` is the zero section and
//! `L_0 = span(f)` the fibre over the origin of `T*Q`.
//!
//! A [`Chart`] based at `L` with transversal complement `N` identifies `N`
//! with `L*` through `n -> omega(., n)`. A lagrangian `M` transversal to `N`
//! is the graph of a symmetric `A : L -> L*`; its frame is `B + N_dual A`
//! where the columns of `N_dual` are dual to the base basis `B`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_TAU};

/// Number of random candidates tried by [`find_common_transversal`] after
/// the two fixed ones.
pub const TRANSVERSAL_RANDOM_BUDGET: u64 = 64;

/// Seed offset for the random candidates of the transversal search, kept
/// away from small user seeds.
const TRANSVERSAL_SEED_BASE: u64 = 0x5eed_0000;

/// `J x` for the canonical form, without materializing `J`.
pub fn apply_j(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() / 2;
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    out.rows_mut(0, n).copy_from(&m.rows(n, n));
    out.rows_mut(n, n).copy_from(&(-m.rows(0, n)));
    out
}

/// Matrix of pairings `omega(m1_i, m2_j)`.
pub fn omega_matrix(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> DMatrix<f64> {
    m1.transpose() * apply_j(m2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    n: usize,
    form: DMatrix<f64>,
}

impl SymplecticSpace {
    pub fn canonical(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("half-dimension n must be at least 1".into()));
        }
        let mut form = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            form[(i, n + i)] = 1.0;
            form[(n + i, i)] = -1.0;
        }
        Ok(Self { n, form })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn form_matrix(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn omega(&self, u: &DVector<f64>, w: &DVector<f64>) -> f64 {
        (u.transpose() * &self.form * w)[(0, 0)]
    }

    /// `e_i` (0-based).
    pub fn e(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(2 * self.n);
        v[i] = 1.0;
        v
    }

    /// `f_i` (0-based).
    pub fn f(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(2 * self.n);
        v[self.n + i] = 1.0;
        v
    }

    /// `L_0 = span(f_1..f_n)`, the fibre over the origin.
    pub fn l0(&self) -> LagrangianFrame {
        let mut m = DMatrix::zeros(2 * self.n, self.n);
        m.view_mut((self.n, 0), (self.n, self.n)).fill_with_identity();
        LagrangianFrame::from_orthonormal(m, DEFAULT_TAU)
    }

    /// `Q = span(e_1..e_n)`, the zero section.
    pub fn q(&self) -> LagrangianFrame {
        let mut m = DMatrix::zeros(2 * self.n, self.n);
        m.view_mut((0, 0), (self.n, self.n)).fill_with_identity();
        LagrangianFrame::from_orthonormal(m, DEFAULT_TAU)
    }

    /// Chart based at `Q` with complement `L_0`: graphs `[I; A]`.
    pub fn q_chart(&self) -> Chart {
        Chart::new(self.q(), self.l0()).expect("Q and L_0 are transversal")
    }

    /// Chart based at `L_0` with complement `Q`: graphs `[-A; I]`.
    pub fn l0_chart(&self) -> Chart {
        Chart::new(self.l0(), self.q()).expect("Q and L_0 are transversal")
    }
}

pub fn make_canonical_space(n: usize) -> Result<SymplecticSpace> {
    SymplecticSpace::canonical(n)
}

/// Whether the columns of `m` span a lagrangian subspace of `space`.
pub fn is_lagrangian(m: &DMatrix<f64>, space: &SymplecticSpace, tol: f64) -> Result<bool> {
    if m.nrows() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: m.nrows() });
    }
    let n = space.n();
    if m.ncols() != n || linalg::numerical_rank(m, tol) != n {
        return Ok(false);
    }
    let norm = linalg::spectral_norm(m);
    let iso = linalg::max_abs(&omega_matrix(m, m));
    Ok(iso <= tol * norm * norm * n as f64)
}

/// A lagrangian subspace given by a `2n x n` frame with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianFrame {
    columns: DMatrix<f64>,
    tol: f64,
}

impl LagrangianFrame {
    /// Validates rank and isotropy, then orthonormalizes the columns.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(m, DEFAULT_TAU)
    }

    pub fn with_tol(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() % 2 != 0 {
            return Err(Error::InvalidDimension(format!("frame has {} rows", m.nrows())));
        }
        let space = SymplecticSpace::canonical(m.nrows() / 2)?;
        if m.ncols() != space.n() {
            return Err(Error::DimensionMismatch { expected: space.n(), got: m.ncols() });
        }
        if !is_lagrangian(&m, &space, tol)? {
            return Err(Error::NotLagrangian("rank or isotropy check failed".into()));
        }
        Ok(Self::from_orthonormal(linalg::orthonormalize_columns(&m), tol))
    }

    /// Wraps columns already known to be orthonormal and isotropic.
    pub(crate) fn from_orthonormal(columns: DMatrix<f64>, tol: f64) -> Self {
        Self { columns, tol }
    }

    /// Frame from a unitary `U = X + iY`: columns of `[X; Y]`.
    pub fn from_unitary(u: &DMatrix<Complex64>) -> Self {
        let n = u.nrows();
        let mut m = DMatrix::zeros(2 * n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = u[(i, j)].re;
                m[(n + i, j)] = u[(i, j)].im;
            }
        }
        Self::from_orthonormal(linalg::orthonormalize_columns(&m), DEFAULT_TAU)
    }

    pub fn n(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `X + iY` for the stored orthonormal frame `[X; Y]`; unitary.
    pub fn unitary(&self) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| Complex64::new(self.columns[(i, j)], self.columns[(n + i, j)]))
    }

    pub fn same_subspace(&self, other: &LagrangianFrame) -> bool {
        intersection_dim(self, other).map(|k| k == self.n()).unwrap_or(false)
    }
}

/// `dim(L1 ∩ L2) = 2n - rank([M1 | M2])`.
pub fn intersection_dim(l1: &LagrangianFrame, l2: &LagrangianFrame) -> Result<usize> {
    if l1.columns.nrows() != l2.columns.nrows() {
        return Err(Error::DimensionMismatch { expected: l1.columns.nrows(), got: l2.columns.nrows() });
    }
    let n = l1.n();
    let mut stacked = DMatrix::zeros(2 * n, 2 * n);
    stacked.columns_mut(0, n).copy_from(&l1.columns);
    stacked.columns_mut(n, n).copy_from(&l2.columns);
    Ok(2 * n - linalg::numerical_rank(&stacked, l1.tol.max(l2.tol)))
}

/// Smallest sine of the principal angles between two lagrangians; zero
/// exactly when they intersect.
pub fn transversality(l1: &LagrangianFrame, l2: &LagrangianFrame) -> f64 {
    linalg::singular_values(&omega_matrix(&l1.columns, &l2.columns))
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// An `n x n` real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricForm {
    entries: DMatrix<f64>,
}

impl SymmetricForm {
    /// Symmetrizes `(m + m^T) / 2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        Ok(Self { entries: linalg::symmetrize(&m) })
    }

    pub fn from_symmetric(m: DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self { entries: linalg::symmetrize(&m) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { entries: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: DMatrix::identity(n, n) }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self { entries: DMatrix::from_diagonal(&DVector::from_column_slice(d)) }
    }

    pub fn scalar(a: f64) -> Self {
        Self::diagonal(&[a])
    }

    /// `-v v^T`.
    pub fn neg_outer(v: &DVector<f64>) -> Self {
        Self { entries: -(v * v.transpose()) }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn nullity(&self, tau: f64) -> usize {
        linalg::nullity(&self.entries, tau)
    }

    pub fn signature(&self, tau: f64) -> Result<i32> {
        linalg::signature(&self.entries, tau).map_err(Error::SingularForm)
    }

    pub fn inverse(&self, tau: f64) -> Result<SymmetricForm> {
        let k = self.nullity(tau);
        if k > 0 {
            return Err(Error::SingularForm(k));
        }
        let (vals, vecs) = linalg::sym_eigen(&self.entries);
        let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] / vals[j]);
        Ok(Self::from_symmetric(scaled * vecs.transpose()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { entries: &self.entries * s }
    }

    /// Frobenius pairing `tr(A B)` of symmetric matrices.
    pub fn pairing(&self, other: &SymmetricForm) -> f64 {
        self.entries.component_mul(&other.entries).sum()
    }
}

/// Chart `rho_N` on the open set of lagrangians transversal to `complement`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    base: LagrangianFrame,
    complement: LagrangianFrame,
    /// Columns `b_i` of the base frame; fixes `S^2(L) <-> symmetric matrices`.
    base_basis: DMatrix<f64>,
    /// Basis `n_j` of the complement with `omega(b_i, n_j) = delta_ij`.
    dual_basis: DMatrix<f64>,
}

impl Chart {
    pub fn new(base: LagrangianFrame, complement: LagrangianFrame) -> Result<Self> {
        let k = intersection_dim(&base, &complement)?;
        if k > 0 {
            return Err(Error::NotTransversal(k));
        }
        let base_basis = base.columns.clone();
        let gram = omega_matrix(&base_basis, &complement.columns);
        // dual basis N G^{-1}, i.e. the solution of G^T X^T = N^T
        let dual_t = gram.transpose().lu().solve(&complement.columns.transpose()).ok_or(Error::NotTransversal(1))?;
        let dual_basis = dual_t.transpose();
        Ok(Self { base, complement, base_basis, dual_basis })
    }

    pub fn base(&self) -> &LagrangianFrame {
        &self.base
    }

    pub fn complement(&self) -> &LagrangianFrame {
        &self.complement
    }

    pub fn base_basis(&self) -> &DMatrix<f64> {
        &self.base_basis
    }

    pub fn dual_basis(&self) -> &DMatrix<f64> {
        &self.dual_basis
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// Coefficients `(X, Y)` of `m = B X + N_dual Y`.
    fn split(&self, m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let x = -omega_matrix(&self.dual_basis, m);
        let y = omega_matrix(&self.base_basis, m);
        (x, y)
    }

    /// Same chart with a different complement.
    pub fn with_complement(&self, complement: LagrangianFrame) -> Result<Chart> {
        Chart::new(self.base.clone(), complement)
    }
}

/// `rho_N(L)`: the symmetric matrix whose graph over the chart base is `L`.
pub fn chart_coords(l: &LagrangianFrame, chart: &Chart) -> Result<SymmetricForm> {
    let k = intersection_dim(l, &chart.complement)?;
    if k > 0 {
        return Err(Error::NotTransversal(k));
    }
    let (x, y) = chart.split(&l.columns);
    // A = Y X^{-1}  <=>  X^T A = Y^T (A symmetric)
    let lu = x.transpose().lu();
    let a = lu.solve(&y.transpose()).ok_or(Error::NotTransversal(1))?;
    Ok(SymmetricForm::from_symmetric(a))
}

/// Lagrangian frame of the graph of `A` over the chart base.
pub fn graph_from_symmetric(a: &SymmetricForm, chart: &Chart) -> LagrangianFrame {
    let m = &chart.base_basis + &chart.dual_basis * a.matrix();
    LagrangianFrame::from_orthonormal(linalg::orthonormalize_columns(&m), chart.base.tol)
}

/// `B_{NN'}` such that `rho_{N'} = (I + rho_N B)^{-1} rho_N`.
///
/// The new complement is written as `N' = {n + B' n}` over `N`; the
/// returned matrix is `-B'` so that the inverse identity reads
/// `rho_{N'}^{-1} = rho_N^{-1} + B_{NN'}`.
pub fn b_matrix(chart: &Chart, new_complement: &LagrangianFrame) -> Result<SymmetricForm> {
    let k = intersection_dim(new_complement, &chart.base)?;
    if k > 0 {
        return Err(Error::NotTransversal(k));
    }
    let (p, r) = chart.split(&new_complement.columns);
    // B' = P R^{-1}
    let lu = r.transpose().lu();
    let graph = lu.solve(&p.transpose()).ok_or(Error::NotTransversal(1))?.transpose();
    Ok(SymmetricForm::from_symmetric(-graph))
}

/// `(I + A B)^{-1} A`.
pub fn transition(a: &SymmetricForm, b: &SymmetricForm) -> Result<SymmetricForm> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.n() });
    }
    let m = DMatrix::identity(n, n) + a.matrix() * b.matrix();
    if linalg::numerical_rank(&m, DEFAULT_TAU) < n {
        return Err(Error::SingularTransition);
    }
    let r = m.lu().solve(a.matrix()).ok_or(Error::SingularTransition)?;
    Ok(SymmetricForm::from_symmetric(r))
}

/// Deterministic Haar-distributed lagrangian: orthonormalize a complex
/// Gaussian matrix to a unitary `U` and take the frame `[Re U; Im U]`.
pub fn random_lagrangian(seed: u64, space: &SymplecticSpace) -> LagrangianFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_lagrangian_with(&mut rng, space.n())
}

pub fn random_lagrangian_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> LagrangianFrame {
    LagrangianFrame::from_unitary(&haar_unitary(rng, n))
}

/// Haar unitary via Gram-Schmidt of a complex Ginibre matrix (the implied
/// `R` factor has positive diagonal, which is what makes the law Haar).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<Complex64> {
    let mut z = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let proj: Complex64 = (0..n).map(|r| z[(r, i)].conj() * z[(r, j)]).sum();
                for r in 0..n {
                    let zi = z[(r, i)];
                    z[(r, j)] -= proj * zi;
                }
            }
        }
        let norm = (0..n).map(|r| z[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..n {
            z[(r, j)] /= norm;
        }
    }
    z
}

/// GOE-style random symmetric matrix with entries of unit scale.
pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SymmetricForm {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    SymmetricForm::from_symmetric(g)
}

fn transversal_candidates(n: usize) -> impl Iterator<Item = LagrangianFrame> {
    let space = SymplecticSpace::canonical(n).expect("n >= 1");
    let q = space.q();
    let diag = graph_from_symmetric(&SymmetricForm::identity(n), &space.q_chart());
    [q, diag].into_iter().chain(
        (0..TRANSVERSAL_RANDOM_BUDGET).map(move |k| random_lagrangian(TRANSVERSAL_SEED_BASE + k, &space)),
    )
}

/// A lagrangian transversal to both inputs: tries `Q`, then the graph of
/// `I` over `Q`, then [`TRANSVERSAL_RANDOM_BUDGET`] seeded random ones.
pub fn find_common_transversal(l1: &LagrangianFrame, l2: &LagrangianFrame) -> Result<LagrangianFrame> {
    find_transversal_to(&[l1, l2])
}

pub fn find_transversal_to(frames: &[&LagrangianFrame]) -> Result<LagrangianFrame> {
    let n = frames.first().map(|f| f.n()).ok_or_else(|| Error::InvalidArgument("no frames".into()))?;
    let mut tried = 0;
    for cand in transversal_candidates(n) {
        tried += 1;
        let mut ok = true;
        for f in frames {
            if intersection_dim(&cand, f)? != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(cand);
        }
    }
    Err(Error::SearchFailed(tried))
}

/// The best-conditioned candidate (largest worst-case [`transversality`])
/// among the same candidate list. Used where charts must stay well scaled.
pub fn best_transversal_to(frames: &[&LagrangianFrame], good_enough: f64) -> Result<LagrangianFrame> {
    let n = frames.first().map(|f| f.n()).ok_or_else(|| Error::InvalidArgument("no frames".into()))?;
    let mut best: Option<(f64, LagrangianFrame)> = None;
    let mut tried = 0;
    for cand in transversal_candidates(n) {
        tried += 1;
        let score = frames.iter().map(|f| transversality(&cand, f)).fold(f64::INFINITY, f64::min);
        if score >= good_enough {
            return Ok(cand);
        }
        if best.as_ref().map(|b| score > b.0).unwrap_or(true) {
            best = Some((score, cand));
        }
    }
    match best {
        Some((score, cand)) if score > 0.0 && frames.iter().all(|f| intersection_dim(&cand, f) == Ok(0)) => Ok(cand),
        _ => Err(Error::SearchFailed(tried)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn frame(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn canonical_form_n1() {
        let s = make_canonical_space(1).unwrap();
        assert_eq!(s.form_matrix(), &frame(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    }

    #[test]
    fn canonical_form_squares_to_minus_identity() {
        let s = make_canonical_space(2).unwrap();
        let j = s.form_matrix();
        assert_eq!(j * j, -DMatrix::<f64>::identity(4, 4));
        assert_eq!(j.transpose(), -j.clone());
    }

    #[test]
    fn canonical_pairing_n3() {
        let s = make_canonical_space(3).unwrap();
        assert_eq!(s.omega(&s.e(1), &s.f(1)), 1.0);
        assert_eq!(s.omega(&s.e(1), &s.f(2)), 0.0);
        assert_eq!(s.omega(&s.f(1), &s.e(1)), -1.0);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(make_canonical_space(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn omega_pairs_q_with_l0_as_dual() {
        // x_j(e_i) = delta_ij, and f_j is identified with x_j
        let s = make_canonical_space(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_eq!(s.omega(&s.e(i), &s.f(j)), expected);
            }
        }
    }

    #[test]
    fn lagrangian_checks() {
        let s = make_canonical_space(2).unwrap();
        assert!(is_lagrangian(s.l0().columns(), &s, DEFAULT_TAU).unwrap());
        let e1f1 = frame(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(!is_lagrangian(&e1f1, &s, DEFAULT_TAU).unwrap());
        assert!(LagrangianFrame::new(e1f1).is_err());
        let wrong = DMatrix::zeros(6, 2);
        assert!(matches!(is_lagrangian(&wrong, &s, DEFAULT_TAU), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn intersection_examples() {
        let s = make_canonical_space(2).unwrap();
        assert_eq!(intersection_dim(&s.l0(), &s.l0()).unwrap(), 2);
        assert_eq!(intersection_dim(&s.l0(), &s.q()).unwrap(), 0);
        let l = graph_from_symmetric(&SymmetricForm::diagonal(&[1.0, 0.0]), &s.l0_chart());
        assert_eq!(intersection_dim(&l, &s.l0()).unwrap(), 1);
    }

    #[test]
    fn chart_coords_examples() {
        let s = make_canonical_space(3).unwrap();
        let chart = s.l0_chart();
        let a = chart_coords(chart.base(), &chart).unwrap();
        assert_eq!(a, SymmetricForm::zeros(3));
        assert!(matches!(chart_coords(chart.complement(), &chart), Err(Error::NotTransversal(3))));
    }

    #[test]
    fn one_dimensional_graph() {
        let s = make_canonical_space(1).unwrap();
        let g = graph_from_symmetric(&SymmetricForm::scalar(2.5), &s.q_chart());
        let c = g.columns();
        // span(e_1 + 2.5 f_1)
        assert_abs_diff_eq!(c[(1, 0)] / c[(0, 0)], 2.5, epsilon = 1e-14);
        let z = graph_from_symmetric(&SymmetricForm::zeros(1), &s.q_chart());
        assert!(z.same_subspace(&s.q()));
    }

    #[test]
    fn b_matrix_examples() {
        let s = make_canonical_space(1).unwrap();
        let chart = s.q_chart();
        assert_eq!(b_matrix(&chart, chart.complement()).unwrap(), SymmetricForm::zeros(1));
        // N' = span(f_1 + b e_1) is the graph of b : N -> L; B_{NN'} = -b
        let b = 0.7;
        let np = LagrangianFrame::new(frame(2, 1, &[b, 1.0])).unwrap();
        let bm = b_matrix(&chart, &np).unwrap();
        assert_abs_diff_eq!(bm.matrix()[(0, 0)], -b, epsilon = 1e-14);
        assert!(matches!(b_matrix(&chart, chart.base()), Err(Error::NotTransversal(1))));
    }

    #[test]
    fn transition_examples() {
        let a = SymmetricForm::scalar(1.0);
        assert_eq!(transition(&a, &SymmetricForm::zeros(1)).unwrap(), a);
        assert_eq!(transition(&SymmetricForm::zeros(1), &a).unwrap(), SymmetricForm::zeros(1));
        assert_abs_diff_eq!(transition(&a, &a).unwrap().matrix()[(0, 0)], 0.5, epsilon = 1e-15);
        let m = SymmetricForm::scalar(-1.0);
        assert_eq!(transition(&a, &m), Err(Error::SingularTransition));
    }

    #[test]
    fn transition_differential_at_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_symmetric(&mut rng, 3);
        let d = random_symmetric(&mut rng, 3);
        let h = 1e-6;
        let fwd = transition(&d.scaled(h), &b).unwrap();
        let diff = (fwd.matrix() / h) - d.matrix();
        assert!(linalg::max_abs(&diff) < 1e-5);
    }

    #[test]
    fn hamiltonian_flow_identification_is_opposite() {
        // H(q) = q^T A q / 2 constant on fibres; Hamilton: q' = 0, p' = -A q.
        // The flow at time t sends Q to the graph of -t A, the negative of the
        // chart identification used everywhere else.
        let s = make_canonical_space(2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -2.0]);
        let t = 0.25;
        let mut flowed = DMatrix::zeros(4, 2);
        flowed.view_mut((0, 0), (2, 2)).fill_with_identity();
        flowed.view_mut((2, 0), (2, 2)).copy_from(&(-t * &a));
        let l = LagrangianFrame::new(flowed).unwrap();
        let coords = chart_coords(&l, &s.q_chart()).unwrap();
        // the chart reads the velocity as -A while the flow identification assigns A
        let chart_velocity = coords.matrix() / t;
        assert!(linalg::max_abs(&(chart_velocity + &a)) < 1e-12);
    }

    #[test]
    fn common_transversal_examples() {
        let s = make_canonical_space(1).unwrap();
        let n = find_common_transversal(&s.l0(), &s.q()).unwrap();
        assert_eq!(intersection_dim(&n, &s.l0()).unwrap(), 0);
        assert_eq!(intersection_dim(&n, &s.q()).unwrap(), 0);
        let s3 = make_canonical_space(3).unwrap();
        let q = s3.q();
        let t = find_common_transversal(&q, &q).unwrap();
        assert_eq!(intersection_dim(&t, &q).unwrap(), 0);
    }

    #[test]
    fn random_lagrangian_is_deterministic_and_lagrangian() {
        let s = make_canonical_space(3).unwrap();
        let a = random_lagrangian(11, &s);
        let b = random_lagrangian(11, &s);
        assert_eq!(a, b);
        assert!(is_lagrangian(a.columns(), &s, DEFAULT_TAU).unwrap());
        let u = a.unitary();
        let err = (u.adjoint() * &u - DMatrix::<Complex64>::identity(3, 3)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}
