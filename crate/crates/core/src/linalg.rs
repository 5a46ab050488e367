//! Dense linear-algebra helpers shared by every module: the numerical rank
//! policy, symmetric spectral data, and column orthonormalization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative rank tolerance. A singular value counts as zero when
/// `sigma <= tau * sigma_max * max(rows, cols)`.
pub const DEFAULT_TAU: f64 = 1e-9;

/// Zero threshold for the singular values of an `rows x cols` matrix whose
/// largest singular value is `sigma_max`.
pub fn zero_threshold(sigma_max: f64, rows: usize, cols: usize, tau: f64) -> f64 {
    tau * sigma_max * rows.max(cols) as f64
}

/// Thin SVD `m = U diag(s) V^T` with `s` sorted descending. `V` is square
/// (`cols x cols`); columns of `U` belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided Jacobi SVD.
pub fn svd(m: &DMatrix<f64>) -> Svd {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for r in 0..mat.nrows() {
                        let (x, y) = (mat[(r, p)], mat[(r, q)]);
                        mat[(r, p)] = c * x - s * y;
                        mat[(r, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DMatrix::zeros(rows, cols);
    let mut vs = DMatrix::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        s.push(norms[j]);
        if norms[j] > 0.0 {
            u.set_column(k, &(a.column(j) / norms[j]));
        }
        vs.set_column(k, &v.column(j));
    }
    Svd { u, s, v: vs }
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv = svd(m).s;
    sv.truncate(m.nrows().min(m.ncols()));
    sv
}

pub fn numerical_rank(m: &DMatrix<f64>, tau: f64) -> usize {
    let sv = singular_values(m);
    let Some(&smax) = sv.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    let thr = zero_threshold(smax, m.nrows(), m.ncols(), tau);
    sv.iter().filter(|&&s| s > thr).count()
}

pub fn nullity(m: &DMatrix<f64>, tau: f64) -> usize {
    m.ncols() - numerical_rank(m, tau)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

fn eig_threshold(vals: &DVector<f64>, tau: f64) -> f64 {
    let n = vals.len();
    let smax = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    zero_threshold(smax, n, n, tau)
}

/// Positive minus negative eigenvalue count, or `Err(nullity)` when some
/// eigenvalue is zero under the rank policy.
pub fn signature(a: &DMatrix<f64>, tau: f64) -> Result<i32, usize> {
    let (vals, _) = sym_eigen(a);
    if vals.is_empty() {
        return Ok(0);
    }
    let thr = eig_threshold(&vals, tau);
    let zeros = vals.iter().filter(|v| v.abs() <= thr).count();
    if zeros > 0 || vals.iter().all(|v| *v == 0.0) {
        return Err(zeros.max(1));
    }
    Ok(vals.iter().map(|v| if *v > 0.0 { 1 } else { -1 }).sum())
}

/// Orthonormal basis (as columns) of the numerical kernel of a symmetric matrix.
pub fn sym_kernel(a: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let (vals, vecs) = sym_eigen(a);
    let thr = eig_threshold(&vals, tau);
    let idx: Vec<usize> = (0..n)
        .filter(|&i| vals[i].abs() <= thr || vals.iter().all(|v| *v == 0.0))
        .collect();
    let mut k = DMatrix::zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        k.set_column(c, &vecs.column(i));
    }
    k
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns that
/// are already orthonormal come back unchanged up to round-off.
pub fn orthonormalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = m.clone();
    for j in 0..q.ncols() {
        for _pass in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).into_owned();
                q.column_mut(j).axpy(-proj, &qi, 1.0);
            }
        }
        let norm = q.column(j).norm();
        if norm > 0.0 {
            q.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    q
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis (as columns) of the numerical null space of `m`.
pub fn null_space(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    let d = svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let thr = zero_threshold(smax, m.nrows(), m.ncols(), tau);
    let idx: Vec<usize> = (0..cols).filter(|&i| smax == 0.0 || d.s[i] <= thr).collect();
    let mut out = DMatrix::zeros(cols, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        out.set_column(c, &d.v.column(i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_svd(m: &DMatrix<f64>) {
        let d = svd(m);
        let k = m.ncols();
        let recon = &d.u * DMatrix::from_diagonal(&DVector::from_vec(d.s.clone())) * d.v.transpose();
        assert!(max_abs(&(recon - m)) < 1e-13 * (1.0 + max_abs(m)));
        assert!(max_abs(&(d.v.transpose() * &d.v - DMatrix::identity(k, k))) < 1e-13);
        for i in 0..k {
            if d.s[i] > 1e-10 * d.s[0] {
                let ui = d.u.column(i).into_owned();
                let res = m * (m.transpose() * &ui) - &ui * d.s[i].powi(2);
                assert!(res.norm() < 1e-12 * d.s[0].powi(2), "triple {i}: {res}");
            }
        }
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_triples_are_accurate() {
        // tangent frame with a near-duplicate column and an exact zero column
        let t = DMatrix::from_column_slice(8, 5, &[
            0.999961842185204, -0.004367837146829201, -0.004367837146829201, 0.000019078729344117066, 0.0, 0.0, 0.0, 0.0,
            -0.006177054534539649, 0.00002698139775839103, 0.00002698139775839103, -0.00000011785484833057648, 0.0, 0.0, 0.0, 0.0,
            0.00001907872748674322, -0.0000000833359856816651, -0.0000000833359856816651, 0.0000000003640117314561777, 0.0, 0.0, 0.0, 0.0,
            0.014852043106472477, 1.700062585593704, 1.700062585593704, -0.014852043104531755, -0.0041626679302120195, -0.47649545438432567, -0.47649545438432567, 0.0,
            -0.00006487377302022423, -0.007425879870997381, -0.007425879870997381, 0.00006487378105483996, 0.0, -0.0020813339650935583, -0.0020813339650935583, -0.9529909087646614,
        ]);
        check_svd(&t);
        check_svd(&t.transpose());
        check_svd(&DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]));
        let d = svd(&DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0]));
        assert_eq!(d.s.len(), 3);
        assert!((d.s[0] - 2.0).abs() < 1e-15 && (d.s[1] - 1.0).abs() < 1e-15 && d.s[2] == 0.0);
    }

    #[test]
    fn rank_of_planted_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]);
        assert_eq!(numerical_rank(&m, DEFAULT_TAU), 2);
        assert_eq!(nullity(&m, DEFAULT_TAU), 1);
        assert_eq!(numerical_rank(&DMatrix::zeros(2, 2), DEFAULT_TAU), 0);
    }

    #[test]
    fn signature_rejects_singular() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0, 3.0]));
        assert_eq!(signature(&a, DEFAULT_TAU), Ok(1));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(signature(&b, DEFAULT_TAU), Err(1));
        assert_eq!(sym_kernel(&b, DEFAULT_TAU).ncols(), 1);
        assert_eq!(sym_kernel(&DMatrix::zeros(3, 3), DEFAULT_TAU).ncols(), 3);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let k = null_space(&m, DEFAULT_TAU);
        assert_eq!(k.ncols(), 2);
        assert!(max_abs(&(&m * &k)) < 1e-12);
        assert!(max_abs(&(k.transpose() * &k - DMatrix::identity(2, 2))) < 1e-12);
    }
}
