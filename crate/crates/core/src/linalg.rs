//! Small dense linear-algebra helpers over `Complex64`.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Relative singular-value threshold used for every numerical rank decision.
pub const RANK_TOL: f64 = 1e-9;

/// Builds an `n x m` matrix whose rows are the given vectors.
pub fn rows_to_matrix(rows: &[Vec<Complex64>], ncols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Numerical rank over the complex field: number of singular values above
/// `RANK_TOL` times the largest one.
pub fn numerical_rank(rows: &[Vec<Complex64>], ncols: usize) -> usize {
    if rows.is_empty() || ncols == 0 {
        return 0;
    }
    let m = rows_to_matrix(rows, ncols);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Hermitian positive-semidefinite square root via eigendecomposition.
/// Negative eigenvalues produced by rounding are clamped to zero.
pub fn hermitian_sqrt(q: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = q.clone().symmetric_eigen();
    let n = q.nrows();
    let mut d = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = Complex64::new(eig.eigenvalues[i].max(0.0).sqrt(), 0.0);
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// `sum_l conj(x_l) * w_l * y_l` for a real diagonal weight.
pub fn weighted_inner(x: &[Complex64], w: &[f64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(w).zip(y).map(|((a, &p), b)| a.conj() * b * p).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rank_of_dependent_rows() {
        let rows = vec![vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 2.0), c(-2.0, 0.0)]];
        // second row = 2i * first row
        assert_eq!(numerical_rank(&rows, 2), 1);
        let rows = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
        assert_eq!(numerical_rank(&rows, 2), 2);
        assert_eq!(numerical_rank(&[vec![c(0.0, 0.0); 3]], 3), 0);
    }

    #[test]
    fn sqrt_squares_back() {
        let q = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let f = hermitian_sqrt(&q);
        let back = &f * &f;
        for (a, b) in back.iter().zip(q.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
