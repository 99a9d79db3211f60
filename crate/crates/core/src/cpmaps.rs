//! Linear maps between finite-dimensional C*-algebras.
//!
//! A [`SuperOperator`] stores the matrix of a linear map in the canonical
//! matrix-unit bases of its domain and codomain. Complete positivity is
//! decided through the Choi matrix `C(f) = Σ_ij E_ij ⊗ f(E_ij)`, domain index
//! on the left tensor factor. Maps between direct sums are tested through the
//! lift `ι_B ∘ f ∘ P_A : M_{d_A} → M_{d_B}`, which is CP exactly when `f` is,
//! since the compression `P` undoes the block embedding `ι`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, Element, MatrixAlgebra, Positivity};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ZERO};
use crate::sample;

#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    domain: Algebra,
    codomain: Algebra,
    matrix: CMatrix,
}

impl SuperOperator {
    /// Wrap a `codomain.vec_dim x domain.vec_dim` matrix.
    pub fn new(domain: Algebra, codomain: Algebra, matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (codomain.vec_dim(), domain.vec_dim()) {
            return Err(Error::ShapeMismatch(format!(
                "superoperator {domain} -> {codomain} needs a {}x{} matrix, got {}x{}",
                codomain.vec_dim(),
                domain.vec_dim(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            domain,
            codomain,
            matrix,
        })
    }

    /// Tabulate a linear function on the matrix-unit basis of `domain`.
    pub fn from_fn(
        domain: &Algebra,
        codomain: &Algebra,
        f: impl Fn(&Element) -> Result<Element>,
    ) -> Result<Self> {
        let mut matrix = CMatrix::zeros(codomain.vec_dim(), domain.vec_dim());
        for k in 0..domain.vec_dim() {
            let image = f(&Element::basis(domain, k))?;
            codomain.ensure_eq(image.algebra())?;
            matrix.set_column(k, &image.to_vector());
        }
        Ok(Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix,
        })
    }

    pub fn identity(algebra: &Algebra) -> Self {
        let d = algebra.vec_dim();
        Self {
            domain: algebra.clone(),
            codomain: algebra.clone(),
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn zero(domain: &Algebra, codomain: &Algebra) -> Self {
        Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix: CMatrix::zeros(codomain.vec_dim(), domain.vec_dim()),
        }
    }

    pub fn domain(&self) -> &Algebra {
        &self.domain
    }

    pub fn codomain(&self) -> &Algebra {
        &self.codomain
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        self.domain.ensure_eq(x.algebra())?;
        Element::from_vector(&self.codomain, &(&self.matrix * x.to_vector()))
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &SuperOperator) -> Result<SuperOperator> {
        inner.codomain.ensure_eq(&self.domain)?;
        Ok(Self {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: &self.matrix * &inner.matrix,
        })
    }

    fn same_shape(&self, other: &SuperOperator) -> Result<()> {
        self.domain.ensure_eq(&other.domain)?;
        self.codomain.ensure_eq(&other.codomain)
    }

    pub fn add(&self, other: &SuperOperator) -> Result<SuperOperator> {
        self.same_shape(other)?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &SuperOperator) -> Result<SuperOperator> {
        self.same_shape(other)?;
        Ok(Self {
            matrix: &self.matrix - &other.matrix,
            ..self.clone()
        })
    }

    pub fn scale(&self, alpha: C64) -> SuperOperator {
        Self {
            matrix: &self.matrix * alpha,
            ..self.clone()
        }
    }

    pub fn scale_real(&self, alpha: f64) -> SuperOperator {
        self.scale(C64::new(alpha, 0.0))
    }

    /// Largest entrywise difference between the two superoperator matrices.
    pub fn distance(&self, other: &SuperOperator) -> Result<f64> {
        self.same_shape(other)?;
        Ok(linalg::max_abs_diff(&self.matrix, &other.matrix))
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.matrix)
    }

    /// `M_n(f)`: entrywise application to `n x n` grids.
    pub fn amplify(&self, n: usize) -> Result<SuperOperator> {
        let amp_dom = self.domain.amplified(n)?;
        let amp_cod = self.codomain.amplified(n)?;
        let mut m = CMatrix::zeros(amp_cod.vec_dim(), amp_dom.vec_dim());
        for (b, &nb) in self.domain.blocks().iter().enumerate() {
            for p in 0..nb {
                for q in 0..nb {
                    let k = self.domain.basis_index(b, p, q);
                    for l in 0..self.codomain.vec_dim() {
                        let val = self.matrix[(l, k)];
                        if val == ZERO {
                            continue;
                        }
                        let (c, r, s) = self.codomain.basis_position(l);
                        let mc = self.codomain.blocks()[c];
                        for i in 0..n {
                            for j in 0..n {
                                let src = amp_dom.basis_index(b, i * nb + p, j * nb + q);
                                let dst = amp_cod.basis_index(c, i * mc + r, j * mc + s);
                                m[(dst, src)] = val;
                            }
                        }
                    }
                }
            }
        }
        Ok(Self {
            domain: amp_dom,
            codomain: amp_cod,
            matrix: m,
        })
    }

    /// Adjoint for the trace pairing: `tr(f†(y) x) = tr(y f(x))`.
    pub fn dual(&self) -> SuperOperator {
        let ta = transpose_permutation(&self.domain);
        let tb = transpose_permutation(&self.codomain);
        let m = CMatrix::from_fn(self.domain.vec_dim(), self.codomain.vec_dim(), |k, l| {
            self.matrix[(tb[l], ta[k])]
        });
        Self {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            matrix: m,
        }
    }

    /// `ι_B ∘ f ∘ P_A`, a map between the full matrix envelopes.
    pub fn lift(&self) -> SuperOperator {
        if self.domain.single_block().is_some() && self.codomain.single_block().is_some() {
            return self.clone();
        }
        let embed = block_embedding(&self.codomain);
        let compress = block_compression(&self.domain);
        embed
            .compose(self)
            .and_then(|g| g.compose(&compress))
            .expect("lift shapes conform by construction")
    }
}

/// Index permutation sending the coordinate of `E_ij` to that of `E_ji`.
fn transpose_permutation(a: &Algebra) -> Vec<usize> {
    (0..a.vec_dim())
        .map(|k| {
            let (b, i, j) = a.basis_position(k);
            a.basis_index(b, j, i)
        })
        .collect()
}

/// `x ↦ V* x V` from `M_m` to `M_n` for an `m x n` matrix `V`.
pub fn conjugation_map(v: &CMatrix) -> Result<SuperOperator> {
    let (m, n) = v.shape();
    if m == 0 || n == 0 {
        return Err(Error::ShapeMismatch("conjugation by an empty matrix".into()));
    }
    let domain = Algebra::matrix(m);
    let codomain = Algebra::matrix(n);
    let mut out = CMatrix::zeros(n * n, m * m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..n {
                for l in 0..n {
                    out[(k * n + l, i * m + j)] = v[(i, k)].conj() * v[(j, l)];
                }
            }
        }
    }
    SuperOperator::new(domain, codomain, out)
}

/// `x ↦ xᵀ` on `M_n`.
pub fn transpose_map(n: usize) -> Result<SuperOperator> {
    if n == 0 {
        return Err(Error::InvalidArgument("transpose_map needs n ≥ 1".into()));
    }
    let a = Algebra::matrix(n);
    SuperOperator::from_fn(&a, &a, |x| Element::from_matrix(x.block(0).transpose()))
}

/// `x ↦ λ x` on `M_n` for `λ ≥ 0`.
pub fn scalar_map(n: usize, lambda: f64) -> Result<SuperOperator> {
    if n == 0 {
        return Err(Error::InvalidArgument("scalar_map needs n ≥ 1".into()));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("scalar must be nonnegative, got {lambda}")));
    }
    Ok(SuperOperator::identity(&Algebra::matrix(n)).scale_real(lambda))
}

/// Block-diagonal *-embedding `ι : A → M_d`, `d = total_dim(A)`.
pub fn block_embedding(a: &Algebra) -> SuperOperator {
    let md = Algebra::matrix(a.total_dim());
    SuperOperator::from_fn(a, &md, |x| Element::from_matrix(x.to_block_diagonal()))
        .expect("embedding shapes conform")
}

/// Compression `P : M_d → A` onto the diagonal blocks.
pub fn block_compression(a: &Algebra) -> SuperOperator {
    let md = Algebra::matrix(a.total_dim());
    SuperOperator::from_fn(&md, a, |x| Element::from_block_diagonal(a, x.block(0)))
        .expect("compression shapes conform")
}

fn single_blocks(f: &SuperOperator) -> Result<(usize, usize)> {
    match (f.domain.single_block(), f.codomain.single_block()) {
        (Some(m), Some(n)) => Ok((m, n)),
        _ => Err(Error::MultiBlockUnsupported {
            domain: f.domain.clone(),
            codomain: f.codomain.clone(),
        }),
    }
}

fn choi_unchecked(f: &SuperOperator, m: usize, n: usize) -> CMatrix {
    let mut c = CMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..m {
            for k in 0..n {
                for l in 0..n {
                    c[(i * n + k, j * n + l)] = f.matrix[(k * n + l, i * m + j)];
                }
            }
        }
    }
    c
}

/// Choi matrix `Σ_ij E_ij ⊗ f(E_ij)` of a map `M_m → M_n`.
pub fn choi_of(f: &SuperOperator) -> Result<CMatrix> {
    let (m, n) = single_blocks(f)?;
    Ok(choi_unchecked(f, m, n))
}

/// Inverse of [`choi_of`].
pub fn map_from_choi(c: &CMatrix, m: usize, n: usize) -> Result<SuperOperator> {
    if m == 0 || n == 0 || c.shape() != (m * n, m * n) {
        return Err(Error::ShapeMismatch(format!(
            "Choi matrix of M_{m} -> M_{n} must be {0}x{0}, got {1}x{2}",
            m * n,
            c.nrows(),
            c.ncols()
        )));
    }
    let mut out = CMatrix::zeros(n * n, m * m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..n {
                for l in 0..n {
                    out[(k * n + l, i * m + j)] = c[(i * n + k, j * n + l)];
                }
            }
        }
    }
    SuperOperator::new(Algebra::matrix(m), Algebra::matrix(n), out)
}

/// Verdict of the Choi test, with the most negative eigenpair as witness.
#[derive(Clone, Debug)]
pub struct CpVerdict {
    pub completely_positive: bool,
    pub min_eigenvalue: f64,
    /// Eigenvector of the lifted Choi matrix for `min_eigenvalue`.
    pub witness: CVector,
    pub hermitian_residual: f64,
    pub choi_norm: f64,
}

/// Decide complete positivity through the Choi matrix of the lift.
pub fn is_completely_positive(f: &SuperOperator, tol: f64) -> CpVerdict {
    let lifted = f.lift();
    let m = lifted.domain.total_dim();
    let n = lifted.codomain.total_dim();
    let c = choi_unchecked(&lifted, m, n);
    let hermitian_residual = linalg::max_abs_diff(&c, &c.adjoint());
    let (vals, vecs) = linalg::hermitian_eigen(&c);
    let choi_norm = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min_eigenvalue = vals[0];
    let hermitian = hermitian_residual <= tol * (1.0 + linalg::max_abs(&c));
    CpVerdict {
        completely_positive: hermitian && min_eigenvalue >= -tol * (1.0 + choi_norm),
        min_eigenvalue,
        witness: vecs.column(0).into_owned(),
        hermitian_residual,
        choi_norm,
    }
}

/// Kraus operators `V_k` (shape `d_A x d_B`) with `f = P_B ∘ Σ V_k*(−)V_k ∘ ι_A`.
///
/// For matrix algebras this is the usual `f(x) = Σ V_k* x V_k`. Choi
/// eigenvalues below `tol (1 + ‖C‖)` are dropped; phases are not normalized.
pub fn kraus_decomposition(f: &SuperOperator, tol: f64) -> Result<Vec<CMatrix>> {
    let verdict = is_completely_positive(f, tol);
    if !verdict.completely_positive {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: verdict.min_eigenvalue,
        });
    }
    let lifted = f.lift();
    let m = lifted.domain.total_dim();
    let n = lifted.codomain.total_dim();
    let c = choi_unchecked(&lifted, m, n);
    let (vals, vecs) = linalg::hermitian_eigen(&c);
    let cutoff = tol * (1.0 + verdict.choi_norm);
    let ops = vals
        .iter()
        .enumerate()
        .filter(|(_, &lambda)| lambda > cutoff)
        .map(|(k, &lambda)| {
            let scale = lambda.sqrt();
            CMatrix::from_fn(m, n, |i, l| (vecs[(i * n + l, k)] * scale).conj())
        })
        .collect();
    Ok(ops)
}

/// `x ↦ P_B(Σ V_k* ι_A(x) V_k)` for `d_A x d_B` matrices `V_k`.
pub fn map_from_kraus(domain: &Algebra, codomain: &Algebra, ops: &[CMatrix]) -> Result<SuperOperator> {
    let (da, db) = (domain.total_dim(), codomain.total_dim());
    let mut acc = SuperOperator::zero(&Algebra::matrix(da), &Algebra::matrix(db));
    for (k, v) in ops.iter().enumerate() {
        if v.shape() != (da, db) {
            return Err(Error::ShapeMismatch(format!(
                "Kraus operator {k} is {}x{}, expected {da}x{db}",
                v.nrows(),
                v.ncols()
            )));
        }
        acc = acc.add(&conjugation_map(v)?)?;
    }
    if domain.single_block().is_some() && codomain.single_block().is_some() {
        return Ok(acc);
    }
    block_compression(codomain)
        .compose(&acc)?
        .compose(&block_embedding(domain))
}

/// Outcome of a positivity test on a map.
#[derive(Clone, Debug)]
pub enum MapPositivity {
    /// Established exactly: the map is CP.
    Positive,
    /// A positive input whose image is not positive.
    NotPositive {
        input: Element,
        output: Element,
        verdict: Positivity,
    },
    /// No violation found within the search budget; nothing is claimed.
    Inconclusive { samples: usize },
}

fn violation(f: &SuperOperator, x: &Element, tol: f64) -> Option<MapPositivity> {
    let y = f.apply(x).ok()?;
    match y.positivity(tol) {
        Positivity::Positive => None,
        verdict => Some(MapPositivity::NotPositive {
            input: x.clone(),
            output: y,
            verdict,
        }),
    }
}

/// Semidecision for positivity of `f`.
///
/// `Positive` is reported only when `f` is CP. When either endpoint is
/// commutative, positivity coincides with complete positivity, so a failed
/// Choi test is turned into a concrete violating input. Otherwise a seeded
/// search over rank-one inputs runs `budget` restarts, each refined by
/// alternating minimization of `w* f(v v*) w`.
pub fn is_positive_map(f: &SuperOperator, tol: f64, budget: usize, seed: u64) -> MapPositivity {
    if is_completely_positive(f, tol).completely_positive {
        return MapPositivity::Positive;
    }
    let dom = &f.domain;

    let mut candidates = vec![Element::identity(dom)];
    for (b, &n) in dom.blocks().iter().enumerate() {
        for v in linalg::polarization_vectors(n) {
            candidates.push(Element::rank_one(dom, b, &v).expect("vector fits block"));
        }
    }
    if let Some(w) = candidates.iter().find_map(|x| violation(f, x, tol)) {
        return w;
    }

    let dual = f.dual();
    if f.codomain.is_commutative() {
        for c in 0..f.codomain.num_blocks() {
            let density = dual
                .apply(&Element::matrix_unit(&f.codomain, c, 0, 0))
                .expect("dual maps codomain to domain");
            if let Some(w) = min_eigen_input(&density).and_then(|x| violation(f, &x, tol)) {
                return w;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let b = rng.random_range(0..dom.num_blocks());
        let v = sample::unit_vector(&mut rng, dom.blocks()[b]);
        let mut x = Element::rank_one(dom, b, &v).expect("vector fits block");
        let mut best = f64::INFINITY;
        for _ in 0..8 {
            if let Some(w) = violation(f, &x, tol) {
                return w;
            }
            let y = f.apply(&x).expect("input in domain");
            let (c, lambda) = y.min_eigenvalue();
            if lambda >= best - 1e-12 * (1.0 + lambda.abs()) {
                break;
            }
            best = lambda;
            let (_, vecs) = linalg::hermitian_eigen(y.block(c));
            let w = vecs.column(0).into_owned();
            let probe = Element::rank_one(&f.codomain, c, &w).expect("vector fits block");
            let pulled = dual.apply(&probe).expect("dual maps codomain to domain");
            match min_eigen_input(&pulled) {
                Some(next) => x = next,
                None => break,
            }
        }
    }
    MapPositivity::Inconclusive { samples: budget }
}

/// Rank-one projection onto the lowest eigenvector of the Hermitian part.
fn min_eigen_input(x: &Element) -> Option<Element> {
    let (b, _) = x.min_eigenvalue();
    let (_, vecs) = linalg::hermitian_eigen(x.block(b));
    Element::rank_one(x.algebra(), b, &vecs.column(0).into_owned()).ok()
}

/// Residuals of the two equivalent conditions relating `f_n` and `f_1`.
#[derive(Clone, Debug)]
pub struct LemmaReport {
    /// `max ‖v* f_n(y) v − f_1(v* y v)‖` over spanning `y` and polarizing `v`.
    pub condition_residual: f64,
    /// `‖f_n − M_n(f_1)‖` entrywise.
    pub amplification_distance: f64,
    pub condition_holds: bool,
    pub amplification_holds: bool,
}

impl LemmaReport {
    pub fn concordant(&self) -> bool {
        self.condition_holds == self.amplification_holds
    }
}

/// Compare `f_n : M_n(B) → M_n(A)` against `f_1 : B → A` both through the
/// compression condition `v* f_n(y) v = f_1(v* y v)` and directly against the
/// amplification `M_n(f_1)`.
///
/// Both sides of the condition are linear in `y` and sesquilinear in `v`, so
/// the matrix units of `M_n(B)` and the polarization vectors `e_i`,
/// `e_i + e_j`, `e_i + i e_j` suffice.
pub fn lemma_compression_check(
    f_n: &SuperOperator,
    f_1: &SuperOperator,
    n: usize,
    tol: f64,
) -> Result<LemmaReport> {
    let over_b = MatrixAlgebra::new(f_1.domain(), n)?;
    let over_a = MatrixAlgebra::new(f_1.codomain(), n)?;
    if f_n.domain() != over_b.algebra() || f_n.codomain() != over_a.algebra() {
        return Err(Error::ShapeMismatch(format!(
            "f_n is {} -> {}, expected {} -> {}",
            f_n.domain(),
            f_n.codomain(),
            over_b.algebra(),
            over_a.algebra()
        )));
    }
    let vs = linalg::polarization_vectors(n);
    let mut residual: f64 = 0.0;
    for k in 0..over_b.algebra().vec_dim() {
        let y = Element::basis(over_b.algebra(), k);
        let fy = f_n.apply(&y)?;
        for v in &vs {
            let lhs = over_a.compress(v, &fy)?;
            let rhs = f_1.apply(&over_b.compress(v, &y)?)?;
            residual = residual.max(lhs.max_abs_diff(&rhs)?);
        }
    }
    let distance = f_n.distance(&f_1.amplify(n)?)?;
    Ok(LemmaReport {
        condition_residual: residual,
        amplification_distance: distance,
        condition_holds: residual <= tol,
        amplification_holds: distance <= tol,
    })
}

/// The positive element of `M_n(A)` encoding a CP map `A → M_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiElement {
    pub n: usize,
    pub algebra: Algebra,
    pub element: Element,
}

impl ChoiElement {
    pub fn is_positive(&self, tol: f64) -> bool {
        self.element.is_positive(tol)
    }
}
