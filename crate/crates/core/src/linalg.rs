//! Dense helpers on top of nalgebra: singular values, null spaces, pseudo-inverse solves.

use nalgebra::{DMatrix, DVector};

/// Singular values in descending order. Empty matrices have none.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value among the first `min(rows, cols)`; zero for empty shapes.
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis (as columns) of the null space of `m`, using a relative
/// tolerance on the singular values.
pub fn kernel_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Square up with zero rows so the SVD yields a full right factor.
    let n = rows.max(cols);
    let mut sq = DMatrix::zeros(n, cols);
    sq.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let cut = rel_tol * smax.max(f64::MIN_POSITIVE);
    let null: Vec<usize> = (0..cols).filter(|&i| sigma[i] <= cut || smax == 0.0).collect();
    let mut basis = DMatrix::zeros(cols, null.len());
    for (k, &i) in null.iter().enumerate() {
        basis.set_column(k, &v_t.row(i).transpose());
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of the column space.
pub fn cokernel_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    kernel_basis(&m.transpose(), rel_tol)
}

/// Least-squares / minimum-norm solution of `m x = rhs` via the SVD pseudo-inverse.
pub fn pinv_solve(m: &DMatrix<f64>, rhs: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = (rel_tol * smax).max(f64::MIN_POSITIVE);
    svd.solve(rhs, eps).unwrap_or_else(|_| DVector::zeros(m.ncols()))
}

/// Euclidean norm of a slice.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = kernel_basis(&m, 1e-9);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).norm() < 1e-12);
    }

    #[test]
    fn cokernel_of_tall_matrix() {
        let m = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let c = cokernel_basis(&m, 1e-9);
        assert_eq!(c.ncols(), 2);
        assert!((m.transpose() * &c).norm() < 1e-12);
    }

    #[test]
    fn pinv_matches_inverse_when_square() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let x = pinv_solve(&m, &DVector::from_vec(vec![3.0, 3.0]), 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
