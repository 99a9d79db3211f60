//! Finite-dimensional C*-algebras presented as direct sums of matrix blocks.
//!
//! An [`Algebra`] is `M_{n_1} ⊕ ... ⊕ M_{n_k}`; an [`Element`] holds one dense
//! complex matrix per block. The canonical basis is the set of matrix units
//! `E_ij` of block `b`, ordered lexicographically by `(b, i, j)`, and every
//! vectorization in this crate uses that order.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Algebra {
    blocks: Vec<usize>,
}

impl Algebra {
    pub fn new(blocks: &[usize]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptyBlockList);
        }
        if let Some(index) = blocks.iter().position(|&n| n == 0) {
            return Err(Error::NonPositiveBlockDim { index });
        }
        Ok(Self {
            blocks: blocks.to_vec(),
        })
    }

    /// The full matrix algebra `M_n`.
    ///
    /// # Panics
    /// If `n == 0`.
    pub fn matrix(n: usize) -> Self {
        assert!(n >= 1, "matrix algebra dimension must be positive");
        Self { blocks: vec![n] }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Size of the block-diagonal matrices housing the algebra, `Σ n_i`.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Complex vector-space dimension, `Σ n_i²`.
    pub fn vec_dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// `Some(n)` when the algebra is `M_n`.
    pub fn single_block(&self) -> Option<usize> {
        match self.blocks.as_slice() {
            [n] => Some(*n),
            _ => None,
        }
    }

    pub fn is_commutative(&self) -> bool {
        self.blocks.iter().all(|&n| n == 1)
    }

    /// Offset of block `b` in the vectorized coordinates.
    pub fn vec_offset(&self, b: usize) -> usize {
        self.blocks[..b].iter().map(|n| n * n).sum()
    }

    /// Offset of block `b` along the diagonal of the `total_dim`-sized matrix.
    pub fn diag_offset(&self, b: usize) -> usize {
        self.blocks[..b].iter().sum()
    }

    /// Position of the matrix unit `E_ij` of block `b` in the canonical basis.
    pub fn basis_index(&self, b: usize, i: usize, j: usize) -> usize {
        let n = self.blocks[b];
        self.vec_offset(b) + i * n + j
    }

    /// Inverse of [`Algebra::basis_index`].
    pub fn basis_position(&self, k: usize) -> (usize, usize, usize) {
        let mut rest = k;
        for (b, &n) in self.blocks.iter().enumerate() {
            if rest < n * n {
                return (b, rest / n, rest % n);
            }
            rest -= n * n;
        }
        panic!("basis index {k} out of range for {self}");
    }

    /// Block dims of `M_n(A)`: `(n n_1, ..., n n_k)`.
    pub fn amplified(&self, n: usize) -> Result<Algebra> {
        if n == 0 {
            return Err(Error::InvalidArgument("amplification order must be ≥ 1".into()));
        }
        Ok(Algebra {
            blocks: self.blocks.iter().map(|b| b * n).collect(),
        })
    }

    pub fn ensure_eq(&self, other: &Algebra) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch {
                expected: self.clone(),
                found: other.clone(),
            })
        }
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|n| format!("M_{n}")).collect();
        f.write_str(&parts.join("⊕"))
    }
}

/// Outcome of a positivity test on an element.
#[derive(Clone, Debug, PartialEq)]
pub enum Positivity {
    Positive,
    NotHermitian { residual: f64 },
    NegativeEigenvalue { block: usize, eigenvalue: f64 },
}

impl Positivity {
    pub fn is_positive(&self) -> bool {
        matches!(self, Positivity::Positive)
    }
}

/// A block-diagonal complex matrix belonging to a specific algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    algebra: Algebra,
    blocks: Vec<CMatrix>,
}

impl Element {
    pub fn new(algebra: Algebra, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks supplied for {algebra}",
                blocks.len()
            )));
        }
        for (b, (m, &n)) in blocks.iter().zip(algebra.blocks()).enumerate() {
            if m.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!(
                    "block {b} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(Self { algebra, blocks })
    }

    /// Element of `M_n` from a single square matrix.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self {
            algebra: Algebra::matrix(m.nrows()),
            blocks: vec![m],
        })
    }

    pub fn zero(algebra: &Algebra) -> Self {
        let blocks = algebra.blocks().iter().map(|&n| CMatrix::zeros(n, n)).collect();
        Self {
            algebra: algebra.clone(),
            blocks,
        }
    }

    pub fn identity(algebra: &Algebra) -> Self {
        let blocks = algebra.blocks().iter().map(|&n| CMatrix::identity(n, n)).collect();
        Self {
            algebra: algebra.clone(),
            blocks,
        }
    }

    pub fn matrix_unit(algebra: &Algebra, b: usize, i: usize, j: usize) -> Self {
        let mut x = Self::zero(algebra);
        x.blocks[b][(i, j)] = ONE;
        x
    }

    /// The `k`-th canonical basis element.
    pub fn basis(algebra: &Algebra, k: usize) -> Self {
        let (b, i, j) = algebra.basis_position(k);
        Self::matrix_unit(algebra, b, i, j)
    }

    /// Rank-one `v v*` placed in block `b`.
    pub fn rank_one(algebra: &Algebra, b: usize, v: &CVector) -> Result<Self> {
        let n = algebra.blocks()[b];
        if v.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for block of size {n}",
                v.len()
            )));
        }
        let mut x = Self::zero(algebra);
        x.blocks[b] = linalg::outer(v, v);
        Ok(x)
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &CMatrix {
        &self.blocks[b]
    }

    /// Coefficients in the canonical matrix-unit basis.
    pub fn to_vector(&self) -> CVector {
        let mut v = CVector::zeros(self.algebra.vec_dim());
        let mut k = 0;
        for m in &self.blocks {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    v[k] = m[(i, j)];
                    k += 1;
                }
            }
        }
        v
    }

    pub fn from_vector(algebra: &Algebra, v: &CVector) -> Result<Self> {
        if v.len() != algebra.vec_dim() {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for {algebra} (vec_dim {})",
                v.len(),
                algebra.vec_dim()
            )));
        }
        let mut k = 0;
        let blocks = algebra
            .blocks()
            .iter()
            .map(|&n| {
                let m = CMatrix::from_row_iterator(n, n, v.iter().skip(k).take(n * n).copied());
                k += n * n;
                m
            })
            .collect();
        Ok(Self {
            algebra: algebra.clone(),
            blocks,
        })
    }

    fn zip_with(&self, other: &Element, op: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Result<Element> {
        self.algebra.ensure_eq(&other.algebra)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| op(a, b))
            .collect();
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks,
        })
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, alpha: C64) -> Element {
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|m| m * alpha).collect(),
        }
    }

    pub fn scale_real(&self, alpha: f64) -> Element {
        self.scale(C64::new(alpha, 0.0))
    }

    pub fn adjoint(&self) -> Element {
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|m| m.adjoint()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.blocks.iter().map(|m| m.trace()).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    /// C*-norm: the largest block spectral norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::spectral_norm).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Element) -> Result<f64> {
        self.algebra.ensure_eq(&other.algebra)?;
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| linalg::max_abs_diff(a, b))
            .fold(0.0, f64::max))
    }

    /// `‖x − x*‖_max`.
    pub fn hermitian_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(|m| linalg::max_abs_diff(m, &m.adjoint()))
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol * (1.0 + self.max_abs())
    }

    /// `(x + x*)/2`.
    pub fn hermitian_part(&self) -> Element {
        Element {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|m| (m + m.adjoint()).scale(0.5))
                .collect(),
        }
    }

    /// Per-block spectra of the Hermitian part, ascending.
    pub fn spectra(&self) -> Vec<(Vec<f64>, CMatrix)> {
        self.blocks.iter().map(linalg::hermitian_eigen).collect()
    }

    /// Smallest eigenvalue of the Hermitian part over all blocks, with its block.
    pub fn min_eigenvalue(&self) -> (usize, f64) {
        self.blocks
            .iter()
            .enumerate()
            .map(|(b, m)| (b, linalg::hermitian_eigen(m).0[0]))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("algebras have at least one block")
    }

    /// Positivity with the relative band `λ_min ≥ −tol (1 + ‖x‖)`.
    pub fn positivity(&self, tol: f64) -> Positivity {
        if !self.is_hermitian(tol) {
            return Positivity::NotHermitian {
                residual: self.hermitian_residual(),
            };
        }
        let norm = self.norm();
        let (block, eigenvalue) = self.min_eigenvalue();
        if eigenvalue >= -tol * (1.0 + norm) {
            Positivity::Positive
        } else {
            Positivity::NegativeEigenvalue { block, eigenvalue }
        }
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.positivity(tol).is_positive()
    }

    /// `x ≤ y` in the positive-cone order.
    pub fn le(&self, other: &Element, tol: f64) -> Result<bool> {
        Ok(other.sub(self)?.is_positive(tol))
    }

    /// Split a Hermitian element as `x = x₊ − x₋` with orthogonal positive parts.
    pub fn positive_decomposition(&self, tol: f64) -> Result<(Element, Element)> {
        if !self.is_hermitian(tol) {
            return Err(Error::NotHermitian {
                residual: self.hermitian_residual(),
            });
        }
        let mut plus = Vec::with_capacity(self.blocks.len());
        let mut minus = Vec::with_capacity(self.blocks.len());
        for m in &self.blocks {
            let n = m.nrows();
            let (vals, vecs) = linalg::hermitian_eigen(m);
            let mut p = CMatrix::zeros(n, n);
            let mut q = CMatrix::zeros(n, n);
            for (k, &lambda) in vals.iter().enumerate() {
                let v = vecs.column(k).into_owned();
                let proj = linalg::outer(&v, &v);
                if lambda > 0.0 {
                    p += proj * C64::new(lambda, 0.0);
                } else if lambda < 0.0 {
                    q += proj * C64::new(-lambda, 0.0);
                }
            }
            plus.push(p);
            minus.push(q);
        }
        Ok((
            Element {
                algebra: self.algebra.clone(),
                blocks: plus,
            },
            Element {
                algebra: self.algebra.clone(),
                blocks: minus,
            },
        ))
    }

    /// The block-diagonal `total_dim x total_dim` matrix of this element.
    pub fn to_block_diagonal(&self) -> CMatrix {
        let d = self.algebra.total_dim();
        let mut out = CMatrix::zeros(d, d);
        for (b, m) in self.blocks.iter().enumerate() {
            let off = self.algebra.diag_offset(b);
            out.view_mut((off, off), m.shape()).copy_from(m);
        }
        out
    }

    /// Compress a `total_dim`-sized matrix onto the diagonal blocks of `algebra`.
    pub fn from_block_diagonal(algebra: &Algebra, m: &CMatrix) -> Result<Element> {
        let d = algebra.total_dim();
        if m.shape() != (d, d) {
            return Err(Error::ShapeMismatch(format!(
                "expected {d}x{d} matrix for {algebra}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let blocks = algebra
            .blocks()
            .iter()
            .enumerate()
            .map(|(b, &n)| {
                let off = algebra.diag_offset(b);
                m.view((off, off), (n, n)).into_owned()
            })
            .collect();
        Ok(Element {
            algebra: algebra.clone(),
            blocks,
        })
    }
}

/// `M_n(A)` together with the identification between its elements and
/// `n x n` grids of elements of `A`.
///
/// Block `b` of `M_n(A)` is the `n n_b`-sized matrix whose `(i, j)` sub-block
/// is block `b` of `grid[i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixAlgebra {
    base: Algebra,
    n: usize,
    algebra: Algebra,
}

impl MatrixAlgebra {
    pub fn new(base: &Algebra, n: usize) -> Result<Self> {
        Ok(Self {
            base: base.clone(),
            n,
            algebra: base.amplified(n)?,
        })
    }

    pub fn base(&self) -> &Algebra {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn embed(&self, grid: &[Vec<Element>]) -> Result<Element> {
        if grid.len() != self.n || grid.iter().any(|row| row.len() != self.n) {
            return Err(Error::ShapeMismatch(format!(
                "expected a {0}x{0} grid of elements",
                self.n
            )));
        }
        for row in grid {
            for x in row {
                self.base.ensure_eq(x.algebra())?;
            }
        }
        let blocks = self
            .base
            .blocks()
            .iter()
            .enumerate()
            .map(|(b, &nb)| {
                let mut m = CMatrix::zeros(self.n * nb, self.n * nb);
                for (i, row) in grid.iter().enumerate() {
                    for (j, x) in row.iter().enumerate() {
                        m.view_mut((i * nb, j * nb), (nb, nb)).copy_from(x.block(b));
                    }
                }
                m
            })
            .collect();
        Element::new(self.algebra.clone(), blocks)
    }

    pub fn extract(&self, x: &Element) -> Result<Vec<Vec<Element>>> {
        self.algebra.ensure_eq(x.algebra())?;
        let grid = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let blocks = self
                            .base
                            .blocks()
                            .iter()
                            .enumerate()
                            .map(|(b, &nb)| x.block(b).view((i * nb, j * nb), (nb, nb)).into_owned())
                            .collect();
                        Element {
                            algebra: self.base.clone(),
                            blocks,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(grid)
    }

    /// The grid holding `a` in slot `(i, j)` and zero elsewhere, embedded.
    pub fn embed_at(&self, i: usize, j: usize, a: &Element) -> Result<Element> {
        let mut grid = vec![vec![Element::zero(&self.base); self.n]; self.n];
        grid[i][j] = a.clone();
        self.embed(&grid)
    }

    /// `v* X v = Σ conj(v_i) v_j X_ij`, an element of the base algebra.
    pub fn compress(&self, v: &CVector, x: &Element) -> Result<Element> {
        if v.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for M_{}",
                v.len(),
                self.n
            )));
        }
        let grid = self.extract(x)?;
        let mut acc = Element::zero(&self.base);
        for (i, row) in grid.iter().enumerate() {
            for (j, xij) in row.iter().enumerate() {
                let c = v[i].conj() * v[j];
                if c != ZERO {
                    acc = acc.add(&xij.scale(c))?;
                }
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn make_algebra_dims() {
        let m2 = Algebra::new(&[2]).unwrap();
        assert_eq!((m2.total_dim(), m2.vec_dim()), (2, 4));
        let c2 = Algebra::new(&[1, 1]).unwrap();
        assert_eq!((c2.total_dim(), c2.vec_dim()), (2, 2));
        assert!(c2.is_commutative());
        let a = Algebra::new(&[2, 3]).unwrap();
        assert_eq!((a.total_dim(), a.vec_dim()), (5, 13));
    }

    #[test]
    fn make_algebra_errors() {
        assert!(matches!(Algebra::new(&[]), Err(Error::EmptyBlockList)));
        assert!(matches!(
            Algebra::new(&[2, 0]),
            Err(Error::NonPositiveBlockDim { index: 1 })
        ));
    }

    #[test]
    fn basis_index_round_trip() {
        let a = Algebra::new(&[2, 1, 3]).unwrap();
        for k in 0..a.vec_dim() {
            let (b, i, j) = a.basis_position(k);
            assert_eq!(a.basis_index(b, i, j), k);
            let e = Element::basis(&a, k);
            let v = e.to_vector();
            assert_eq!(v[k], ONE);
            assert_eq!(v.iter().filter(|z| **z != ZERO).count(), 1);
        }
    }

    #[test]
    fn adjoint_of_nilpotent() {
        let x = Element::from_matrix(CMatrix::from_row_slice(2, 2, &[c(0.), c(1.), c(0.), c(0.)])).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(0.), c(0.), c(1.), c(0.)]);
        assert_eq!(x.adjoint().block(0), &expected);
    }

    #[test]
    fn involution_and_unit_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Algebra::new(&[2, 3]).unwrap();
        for _ in 0..20 {
            let x = sample::element(&mut rng, &a);
            let y = sample::element(&mut rng, &a);
            let alpha = C64::new(0.3, -1.7);
            assert_eq!(x.adjoint().adjoint(), x);
            let lhs = x.mul(&y).unwrap().adjoint();
            let rhs = y.adjoint().mul(&x.adjoint()).unwrap();
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
            let lhs = x.scale(alpha).adjoint();
            let rhs = x.adjoint().scale(alpha.conj());
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-14);
            let one = Element::identity(&a);
            assert!(one.mul(&x).unwrap().max_abs_diff(&x).unwrap() < 1e-15);
        }
    }

    #[test]
    fn mismatched_algebras_rejected() {
        let x = Element::identity(&Algebra::matrix(2));
        let y = Element::identity(&Algebra::new(&[1, 1]).unwrap());
        assert!(matches!(x.add(&y), Err(Error::AlgebraMismatch { .. })));
        assert!(matches!(x.mul(&y), Err(Error::AlgebraMismatch { .. })));
    }

    #[test]
    fn positivity_examples() {
        assert_eq!(Element::identity(&Algebra::matrix(3)).positivity(1e-9), Positivity::Positive);
        let x = Element::from_matrix(CMatrix::from_row_slice(2, 2, &[c(1.), c(0.), c(0.), c(-2.)])).unwrap();
        match x.positivity(1e-9) {
            Positivity::NegativeEigenvalue { block, eigenvalue } => {
                assert_eq!(block, 0);
                assert!((eigenvalue + 2.0).abs() < 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
        let nh = Element::from_matrix(CMatrix::from_row_slice(2, 2, &[c(1.), c(1.), c(0.), c(1.)])).unwrap();
        assert!(matches!(nh.positivity(1e-9), Positivity::NotHermitian { .. }));
    }

    #[test]
    fn diagonal_decomposition() {
        let x = Element::from_matrix(CMatrix::from_row_slice(2, 2, &[c(1.), c(0.), c(0.), c(-2.)])).unwrap();
        let (p, m) = x.positive_decomposition(1e-9).unwrap();
        let ep = CMatrix::from_row_slice(2, 2, &[c(1.), c(0.), c(0.), c(0.)]);
        let em = CMatrix::from_row_slice(2, 2, &[c(0.), c(0.), c(0.), c(2.)]);
        assert!(linalg::max_abs_diff(p.block(0), &ep) < 1e-14);
        assert!(linalg::max_abs_diff(m.block(0), &em) < 1e-14);
    }

    #[test]
    fn decomposition_of_positive_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = Algebra::new(&[3, 1]).unwrap();
        let x = sample::positive_element(&mut rng, &a);
        let (p, m) = x.positive_decomposition(1e-9).unwrap();
        assert!(p.max_abs_diff(&x).unwrap() < 1e-12);
        assert!(m.max_abs() < 1e-12);
    }

    #[test]
    fn decomposition_rejects_non_hermitian() {
        let x = Element::from_matrix(CMatrix::from_row_slice(2, 2, &[c(0.), c(1.), c(0.), c(0.)])).unwrap();
        assert!(matches!(x.positive_decomposition(1e-9), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn matrix_algebra_dims() {
        let m2m3 = MatrixAlgebra::new(&Algebra::matrix(3), 2).unwrap();
        assert_eq!(m2m3.algebra().blocks(), &[6]);
        let a = Algebra::new(&[2, 3]).unwrap();
        assert_eq!(MatrixAlgebra::new(&a, 1).unwrap().algebra(), &a);
        let c2 = Algebra::new(&[1, 1]).unwrap();
        assert_eq!(MatrixAlgebra::new(&c2, 2).unwrap().algebra().blocks(), &[2, 2]);
        assert!(MatrixAlgebra::new(&c2, 0).is_err());
    }

    #[test]
    fn grid_multiplication_rule() {
        // (XY)_ik = Σ_j X_ij Y_jk in M_2(C²).
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c2 = Algebra::new(&[1, 1]).unwrap();
        let ma = MatrixAlgebra::new(&c2, 2).unwrap();
        let gx: Vec<Vec<Element>> = (0..2).map(|_| (0..2).map(|_| sample::element(&mut rng, &c2)).collect()).collect();
        let gy: Vec<Vec<Element>> = (0..2).map(|_| (0..2).map(|_| sample::element(&mut rng, &c2)).collect()).collect();
        let prod = ma.embed(&gx).unwrap().mul(&ma.embed(&gy).unwrap()).unwrap();
        let grid = ma.extract(&prod).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let mut acc = Element::zero(&c2);
                for j in 0..2 {
                    acc = acc.add(&gx[i][j].mul(&gy[j][k]).unwrap()).unwrap();
                }
                assert!(grid[i][k].max_abs_diff(&acc).unwrap() < 1e-13);
            }
        }
    }

    #[test]
    fn embed_rejects_malformed_grid() {
        let ma = MatrixAlgebra::new(&Algebra::matrix(2), 2).unwrap();
        let row = vec![Element::zero(&Algebra::matrix(2))];
        assert!(matches!(ma.embed(&[row.clone(), row]), Err(Error::ShapeMismatch(_))));
    }
}
