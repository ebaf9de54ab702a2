//! Dense symmetric eigendecomposition.

use nalgebra::DMatrix;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// as columns.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let eig = a.self_adjoint_eigen(faer::Side::Lower).expect("symmetric eigensolver converges");
    let (s, u) = (eig.S().column_vector(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| s[x].total_cmp(&s[y]));
    let values = order.iter().map(|&k| s[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| u[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues in ascending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut v = a.self_adjoint_eigenvalues(faer::Side::Lower).expect("symmetric eigensolver converges");
    v.sort_by(|x, y| x.total_cmp(y));
    v
}
