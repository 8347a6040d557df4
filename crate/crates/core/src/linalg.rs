//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Column `k` of the returned matrix pairs with value `k`.
pub(crate) fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    // Symmetrize first; SymmetricEigen only reads the lower triangle.
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub(crate) fn outer(u: &DVector<Complex64>, v: &DVector<Complex64>) -> DMatrix<Complex64> {
    u * v.adjoint()
}

pub(crate) fn real_trace(m: &DMatrix<Complex64>) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Number of eigenvalues above `rel_threshold` times the largest magnitude.
pub(crate) fn numerical_rank(eigenvalues: &[f64], rel_threshold: f64) -> usize {
    let largest = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if largest == 0.0 {
        return 0;
    }
    eigenvalues
        .iter()
        .filter(|&&v| v > rel_threshold * largest)
        .count()
}
