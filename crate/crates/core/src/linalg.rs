//! Dense complex matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized as `(m + m*)/2` first so the spectrum is real by
/// construction. Columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `u v*` as a matrix.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Standard basis vector `e_i` in `C^n`.
pub fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = ONE;
    v
}

/// Vectors whose rank-one projections span the Hermitian `n x n` matrices:
/// `e_i`, `e_i + e_j` and `e_i + i e_j` for `i < j`. There are exactly `n^2`.
pub fn polarization_vectors(n: usize) -> Vec<CVector> {
    let mut out: Vec<CVector> = (0..n).map(|i| basis_vector(n, i)).collect();
    for i in 0..n {
        for j in i + 1..n {
            out.push(basis_vector(n, i) + basis_vector(n, j));
            out.push(basis_vector(n, i) + basis_vector(n, j) * I);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_is_sorted() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(-2.0, 0.0),
            C64::new(1.0, 0.0),
        ]));
        let (vals, vecs) = hermitian_eigen(&m);
        assert_eq!(vals.len(), 3);
        assert!((vals[0] + 2.0).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
        let recon = &vecs
            * CMatrix::from_diagonal(&CVector::from_iterator(
                3,
                vals.iter().map(|&x| C64::new(x, 0.0)),
            ))
            * vecs.adjoint();
        assert!(max_abs_diff(&recon, &m) < 1e-13);
    }

    #[test]
    fn polarization_count() {
        for n in 1..5 {
            assert_eq!(polarization_vectors(n).len(), n * n);
        }
    }
}
