//! Matrix algebras as a dense family: `N_Mat`, `N_CP`, natural families of
//! hom-set functions, and recovery of a CP map from such a family.
//!
//! A CP map `f : A → B` induces, for each `n`, the function
//! `Hom_CP(B, M_n) → Hom_CP(A, M_n)`, `g ↦ g ∘ f`, and these commute with
//! post-composition by every CP map `M_m → M_n`. Conversely every natural
//! family is of that form. Reconstruction goes through the split idempotent
//! of `B` inside `M_d`, `d = total_dim(B)`: with embedding `ι : B → M_d` and
//! compression `P : M_d → B`, the map is `f = P ∘ φ_d(ι)`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, MatrixAlgebra};
use crate::cpmaps::{
    block_compression, block_embedding, conjugation_map, is_completely_positive, scalar_map,
    transpose_map, ChoiElement, SuperOperator,
};
use crate::duality::Functional;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::sample;

/// A morphism `m → n` of `N_Mat`: an `m x n` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct NMatMorphism {
    matrix: CMatrix,
}

impl NMatMorphism {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::ShapeMismatch("N_Mat objects are nonzero dimensions".into()));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn source(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn target(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `self : m → n` followed by `next : n → p`, i.e. the product `self · next`.
    pub fn then(&self, next: &NMatMorphism) -> Result<NMatMorphism> {
        if self.target() != next.source() {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose {}→{} with {}→{}",
                self.source(),
                self.target(),
                next.source(),
                next.target()
            )));
        }
        Ok(Self {
            matrix: &self.matrix * &next.matrix,
        })
    }
}

/// Self-duality of `N_Mat`: `V ↦ Vᵀ`, reversing source and target.
pub fn nmat_dual(v: &NMatMorphism) -> NMatMorphism {
    NMatMorphism {
        matrix: v.matrix.transpose(),
    }
}

/// `F(V) = (Vᵀ)* (−) Vᵀ`. For `V : m → n` this is a CP map `M_n → M_m`, and
/// `F(V · W) = F(V) ∘ F(W)`.
pub fn functor_f(v: &NMatMorphism) -> NCpMorphism {
    let map = conjugation_map(&v.matrix.transpose()).expect("N_Mat morphisms are nonempty");
    NCpMorphism { map }
}

/// A morphism `m → n` of `N_CP`: a completely positive map `M_m → M_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct NCpMorphism {
    map: SuperOperator,
}

impl NCpMorphism {
    /// Validates that `map` goes between full matrix algebras and is CP.
    pub fn new(map: SuperOperator, tol: f64) -> Result<Self> {
        if map.domain().single_block().is_none() || map.codomain().single_block().is_none() {
            return Err(Error::MultiBlockUnsupported {
                domain: map.domain().clone(),
                codomain: map.codomain().clone(),
            });
        }
        let verdict = is_completely_positive(&map, tol);
        if !verdict.completely_positive {
            return Err(Error::NotCompletelyPositive {
                min_eigenvalue: verdict.min_eigenvalue,
            });
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: SuperOperator::identity(&Algebra::matrix(n)),
        }
    }

    pub fn source(&self) -> usize {
        self.map.domain().total_dim()
    }

    pub fn target(&self) -> usize {
        self.map.codomain().total_dim()
    }

    pub fn map(&self) -> &SuperOperator {
        &self.map
    }

    pub fn into_map(self) -> SuperOperator {
        self.map
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &NCpMorphism) -> Result<NCpMorphism> {
        Ok(Self {
            map: self.map.compose(&inner.map)?,
        })
    }
}

fn kraus_sum(m: usize, n: usize, ops: &[CMatrix]) -> NCpMorphism {
    let map = crate::cpmaps::map_from_kraus(&Algebra::matrix(m), &Algebra::matrix(n), ops)
        .expect("structural Kraus operators conform");
    NCpMorphism { map }
}

/// `[I_n 0]` or `[0 I_n]` as an `n x 2n` matrix.
fn half_selector(n: usize, upper: bool) -> CMatrix {
    let mut v = CMatrix::zeros(n, 2 * n);
    let off = if upper { 0 } else { n };
    for i in 0..n {
        v[(i, off + i)] = C64::new(1.0, 0.0);
    }
    v
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("structural maps need n ≥ 1".into()))
    } else {
        Ok(())
    }
}

/// `j(a b; c d) = (a 0; 0 d)` on `M_2n`.
pub fn j_map(n: usize) -> Result<NCpMorphism> {
    check_order(n)?;
    let p1 = half_selector(n, true).adjoint() * half_selector(n, true);
    let p2 = half_selector(n, false).adjoint() * half_selector(n, false);
    Ok(kraus_sum(2 * n, 2 * n, &[p1, p2]))
}

/// `t(a b; c d) = a + d`, `M_2n → M_n`.
pub fn t_map(n: usize) -> Result<NCpMorphism> {
    check_order(n)?;
    Ok(kraus_sum(
        2 * n,
        n,
        &[half_selector(n, true).adjoint(), half_selector(n, false).adjoint()],
    ))
}

/// `p(a) = (a 0; 0 0)`, `M_n → M_2n`.
pub fn p_map(n: usize) -> Result<NCpMorphism> {
    check_order(n)?;
    Ok(kraus_sum(n, 2 * n, &[half_selector(n, true)]))
}

/// `q(a) = (0 0; 0 a)`, `M_n → M_2n`.
pub fn q_map(n: usize) -> Result<NCpMorphism> {
    check_order(n)?;
    Ok(kraus_sum(n, 2 * n, &[half_selector(n, false)]))
}

/// `r(a) = (a 0; 0 a)`, `M_n → M_2n`.
pub fn r_map(n: usize) -> Result<NCpMorphism> {
    check_order(n)?;
    Ok(kraus_sum(n, 2 * n, &[half_selector(n, true), half_selector(n, false)]))
}

fn matrix_order(a: &Algebra) -> Result<usize> {
    a.single_block().ok_or_else(|| {
        Error::ShapeMismatch(format!("expected a full matrix algebra, got {a}"))
    })
}

fn require_cp(f: &SuperOperator, tol: f64) -> Result<()> {
    let verdict = is_completely_positive(f, tol);
    if verdict.completely_positive {
        Ok(())
    } else {
        Err(Error::NotCompletelyPositive {
            min_eigenvalue: verdict.min_eigenvalue,
        })
    }
}

/// `h(a) = (f(a) 0; 0 g(a))` for CP maps `f, g : A → M_n`.
pub fn pair_encode(f: &SuperOperator, g: &SuperOperator, tol: f64) -> Result<SuperOperator> {
    f.domain().ensure_eq(g.domain())?;
    f.codomain().ensure_eq(g.codomain())?;
    let n = matrix_order(f.codomain())?;
    require_cp(f, tol)?;
    require_cp(g, tol)?;
    p_map(n)?.map().compose(f)?.add(&q_map(n)?.map().compose(g)?)
}

/// Inverse of [`pair_encode`] on the CP maps `h : A → M_2n` with `j ∘ h = h`.
pub fn pair_decode(h: &SuperOperator, tol: f64) -> Result<(SuperOperator, SuperOperator)> {
    let two_n = matrix_order(h.codomain())?;
    if two_n % 2 != 0 {
        return Err(Error::ShapeMismatch(format!("codomain M_{two_n} has odd order")));
    }
    let n = two_n / 2;
    let residual = j_map(n)?.map().compose(h)?.distance(h)?;
    if residual > tol * (1.0 + h.max_abs()) {
        return Err(Error::NotJFixed { residual });
    }
    require_cp(h, tol)?;
    let upper = conjugation_map(&half_selector(n, true).adjoint())?;
    let lower = conjugation_map(&half_selector(n, false).adjoint())?;
    Ok((upper.compose(h)?, lower.compose(h)?))
}

/// `B` as the splitting of a CP idempotent on `M_d`.
#[derive(Clone, Debug)]
pub struct KaroubiSplitting {
    pub dim: usize,
    /// `e = ι ∘ P`.
    pub idempotent: NCpMorphism,
    /// Block-diagonal *-embedding `ι : B → M_d`.
    pub embedding: SuperOperator,
    /// Block compression `P : M_d → B`.
    pub compression: SuperOperator,
}

pub fn karoubi_idempotent(a: &Algebra) -> KaroubiSplitting {
    let embedding = block_embedding(a);
    let compression = block_compression(a);
    let e = embedding.compose(&compression).expect("shapes conform");
    KaroubiSplitting {
        dim: a.total_dim(),
        idempotent: NCpMorphism { map: e },
        embedding,
        compression,
    }
}

/// The functional `s(X) = Σ_ij f(X_ij)_ij` on `M_n(A)`, no positivity check.
fn state_of(f: &SuperOperator) -> Result<Functional> {
    let n = matrix_order(f.codomain())?;
    let grid = MatrixAlgebra::new(f.domain(), n)?;
    Functional::from_linear_form(grid.algebra(), |x| {
        let cells = grid.extract(x)?;
        let mut acc = C64::new(0.0, 0.0);
        for (i, row) in cells.iter().enumerate() {
            for (j, xij) in row.iter().enumerate() {
                acc += f.apply(xij)?.block(0)[(i, j)];
            }
        }
        Ok(acc)
    })
}

/// Positive functional on `M_n(A)` corresponding to a CP map `f : A → M_n`.
pub fn cpmap_to_state(f: &SuperOperator, tol: f64) -> Result<Functional> {
    require_cp(f, tol)?;
    state_of(f)
}

/// CP map `A → M_n` with `f(a)_ij = s(a placed in slot (i, j))`.
pub fn state_to_cpmap(s: &Functional, a: &Algebra, n: usize, tol: f64) -> Result<SuperOperator> {
    let grid = MatrixAlgebra::new(a, n)?;
    grid.algebra().ensure_eq(s.algebra())?;
    if !s.is_positive(tol) {
        let (_, min_eigenvalue) = s.density().min_eigenvalue();
        return Err(Error::NotPositiveFunctional { min_eigenvalue });
    }
    let mn = Algebra::matrix(n);
    SuperOperator::from_fn(a, &mn, |x| {
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = s.eval(&grid.embed_at(i, j, x)?)?;
            }
        }
        crate::algebra::Element::from_matrix(out)
    })
}

/// Density of the state attached to any linear `f : A → M_n`; positive
/// exactly when `f` is CP.
pub fn choi_element(f: &SuperOperator) -> Result<ChoiElement> {
    let n = matrix_order(f.codomain())?;
    Ok(ChoiElement {
        n,
        algebra: f.domain().clone(),
        element: state_of(f)?.into_density(),
    })
}

/// Components `φ_n : Hom_CP(B, M_n) → Hom_CP(A, M_n)` for `n ≤ truncation`,
/// supplied as a black box. Implementations must be reentrant.
pub trait NaturalFamily: Sync {
    /// `A`.
    fn source(&self) -> &Algebra;
    /// `B`.
    fn target(&self) -> &Algebra;
    fn truncation(&self) -> usize;
    fn component(&self, n: usize, g: &SuperOperator) -> Result<SuperOperator>;
}

fn check_component_input(family: &dyn NaturalFamily, n: usize, g: &SuperOperator) -> Result<()> {
    if n == 0 || n > family.truncation() {
        return Err(Error::InvalidArgument(format!(
            "component {n} outside 1..={}",
            family.truncation()
        )));
    }
    family.target().ensure_eq(g.domain())?;
    Algebra::matrix(n).ensure_eq(g.codomain())
}

/// `φ_n(g) = g ∘ f`.
#[derive(Clone, Debug)]
pub struct RepresentableFamily {
    map: SuperOperator,
    truncation: usize,
}

impl RepresentableFamily {
    pub fn map(&self) -> &SuperOperator {
        &self.map
    }
}

impl NaturalFamily for RepresentableFamily {
    fn source(&self) -> &Algebra {
        self.map.domain()
    }

    fn target(&self) -> &Algebra {
        self.map.codomain()
    }

    fn truncation(&self) -> usize {
        self.truncation
    }

    fn component(&self, n: usize, g: &SuperOperator) -> Result<SuperOperator> {
        check_component_input(self, n, g)?;
        g.compose(&self.map)
    }
}

/// The family `g ↦ g ∘ f` of a CP map, truncated at `truncation`
/// (default `total_dim` of the codomain).
pub fn natural_family_from_map(
    f: &SuperOperator,
    truncation: Option<usize>,
    tol: f64,
) -> Result<RepresentableFamily> {
    require_cp(f, tol)?;
    let truncation = truncation.unwrap_or_else(|| f.codomain().total_dim());
    if truncation == 0 {
        return Err(Error::InvalidArgument("truncation must be ≥ 1".into()));
    }
    Ok(RepresentableFamily {
        map: f.clone(),
        truncation,
    })
}

/// Deliberately non-natural perturbations of a representable family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Perturbation {
    /// `φ_2(g) = (g ∘ f)ᵀ`; other components untouched.
    TwistTranspose,
    /// `φ_n(g) = g ∘ f + ‖g‖_F τ_n` for a fixed CP `τ_n`; homogeneous, not additive.
    DropAdditivity,
}

impl Perturbation {
    pub const NAMES: [&'static str; 2] = ["twist-transpose", "drop-additivity"];

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "twist-transpose" => Some(Self::TwistTranspose),
            "drop-additivity" => Some(Self::DropAdditivity),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::TwistTranspose => "twist-transpose",
            Self::DropAdditivity => "drop-additivity",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PerturbedFamily {
    base: RepresentableFamily,
    kind: Perturbation,
}

impl PerturbedFamily {
    /// Truncation is raised to at least 2 so the twist is visible.
    pub fn new(base: RepresentableFamily, kind: Perturbation) -> Self {
        let truncation = base.truncation.max(2);
        Self {
            base: RepresentableFamily { truncation, ..base },
            kind,
        }
    }

    pub fn kind(&self) -> Perturbation {
        self.kind
    }
}

impl NaturalFamily for PerturbedFamily {
    fn source(&self) -> &Algebra {
        self.base.source()
    }

    fn target(&self) -> &Algebra {
        self.base.target()
    }

    fn truncation(&self) -> usize {
        self.base.truncation
    }

    fn component(&self, n: usize, g: &SuperOperator) -> Result<SuperOperator> {
        let plain = self.base.component(n, g)?;
        match self.kind {
            Perturbation::TwistTranspose if n == 2 => transpose_map(2)?.compose(&plain),
            Perturbation::TwistTranspose => Ok(plain),
            Perturbation::DropAdditivity => {
                let a = self.source();
                let weight = g.matrix().norm();
                // τ_n(x) = (tr x / d) · 1_n
                let tau = SuperOperator::from_fn(a, &Algebra::matrix(n), |x| {
                    let t = x.trace() / a.total_dim() as f64;
                    crate::algebra::Element::from_matrix(CMatrix::identity(n, n) * t)
                })?;
                plain.add(&tau.scale_real(weight))
            }
        }
    }
}

/// Names accepted by [`builtin_family`]: `representable` plus the perturbations.
pub const FAMILY_BUILTINS: [&str; 3] = ["representable", "twist-transpose", "drop-additivity"];

/// Seeded family on a random CP map `A → B`.
pub fn builtin_family(
    name: &str,
    a: &Algebra,
    b: &Algebra,
    seed: u64,
    truncation: Option<usize>,
) -> Result<Box<dyn NaturalFamily + Send>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = sample::cp_map(&mut rng, a, b, 2);
    let base = natural_family_from_map(&f, truncation, crate::DEFAULT_TOL)?;
    if name == "representable" {
        return Ok(Box::new(base));
    }
    let kind = Perturbation::from_name(name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown family builtin `{name}`")))?;
    Ok(Box::new(PerturbedFamily::new(base, kind)))
}

/// Generators drawn for the `h` side of a naturality probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    Conjugation,
    Scalar(f64),
    J,
    T,
    P,
    Q,
    R,
    Kraus(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbeKind {
    /// `φ_n(h ∘ g)` against `h ∘ φ_m(g)`.
    Naturality(Generator),
    /// `φ_n(λ g)` against `λ φ_n(g)`.
    Scalar(f64),
    /// `φ_n(t ∘ encode(f, g))` against `φ_n(f) + φ_n(g)`.
    Additivity,
    /// The family refused a well-formed input.
    Malformed,
}

/// A failing probe, with everything needed to replay it.
#[derive(Clone, Debug)]
pub struct NaturalityViolation {
    pub kind: ProbeKind,
    pub m: usize,
    pub n: usize,
    pub h: Option<SuperOperator>,
    pub g: SuperOperator,
    /// Second summand for additivity probes.
    pub g2: Option<SuperOperator>,
    pub residual: f64,
    pub message: Option<String>,
}

impl fmt::Display for NaturalityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} probe {}→{} residual {:.3e}", self.kind, self.m, self.n, self.residual)?;
        if let Some(msg) = &self.message {
            write!(f, " ({msg})")?;
        }
        Ok(())
    }
}

/// Largest residuals seen on a passing run.
#[derive(Clone, Debug, Default)]
pub struct NaturalityReport {
    pub general_probes: usize,
    pub cone_probes: usize,
    pub general_residual: f64,
    pub scalar_residual: f64,
    pub additivity_residual: f64,
}

#[derive(Clone, Debug)]
pub enum NaturalityVerdict {
    /// Passed at the given probe budget; evidence, not proof.
    Pass(NaturalityReport),
    Violation(Box<NaturalityViolation>),
}

impl NaturalityVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, NaturalityVerdict::Pass(_))
    }
}

#[derive(Clone, Debug)]
pub struct NaturalityConfig {
    /// Random `(h, g)` pairs.
    pub probes: usize,
    /// Additivity probes; each also runs the four scalar probes.
    pub cone_probes: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for NaturalityConfig {
    fn default() -> Self {
        Self {
            probes: 50,
            cone_probes: 8,
            seed: 0,
            tol: crate::DEFAULT_TOL,
        }
    }
}

/// Scalars used by the homogeneity probes.
pub const SCALAR_PROBES: [f64; 4] = [0.0, 0.5, 2.0, 7.25];

fn random_cp_into<R: Rng>(rng: &mut R, b: &Algebra, m: usize) -> SuperOperator {
    let kraus = rng.random_range(1..=2);
    sample::cp_map(rng, b, &Algebra::matrix(m), kraus)
}

/// Draw an `N_CP` morphism `h : M_m → M_n` with `m, n ≤ max`.
fn random_generator<R: Rng>(rng: &mut R, max: usize) -> (Generator, usize, usize, SuperOperator) {
    let half = max / 2;
    let pick = rng.random_range(0..8);
    let k = if half >= 1 { rng.random_range(1..=half) } else { 0 };
    let structural = |g: Generator, m: usize, n: usize, h: Result<NCpMorphism>| {
        (g, m, n, h.expect("structural maps are well formed").into_map())
    };
    match pick {
        1 => {
            let n = rng.random_range(1..=max);
            let lambda = match rng.random_range(0..5) {
                4 => rng.random_range(0.0..5.0),
                i => SCALAR_PROBES[i],
            };
            (Generator::Scalar(lambda), n, n, scalar_map(n, lambda).expect("λ ≥ 0"))
        }
        2 if k > 0 => structural(Generator::J, 2 * k, 2 * k, j_map(k)),
        3 if k > 0 => structural(Generator::T, 2 * k, k, t_map(k)),
        4 if k > 0 => structural(Generator::P, k, 2 * k, p_map(k)),
        5 if k > 0 => structural(Generator::Q, k, 2 * k, q_map(k)),
        6 if k > 0 => structural(Generator::R, k, 2 * k, r_map(k)),
        7 => {
            let (m, n) = (rng.random_range(1..=max), rng.random_range(1..=max));
            let count = rng.random_range(1..=3);
            let ops: Vec<CMatrix> = (0..count).map(|_| sample::matrix(rng, m, n)).collect();
            let h = kraus_sum(m, n, &ops).into_map();
            (Generator::Kraus(count), m, n, h)
        }
        _ => {
            let (m, n) = (rng.random_range(1..=max), rng.random_range(1..=max));
            let v = sample::matrix(rng, m, n);
            (Generator::Conjugation, m, n, conjugation_map(&v).expect("nonempty"))
        }
    }
}

fn exceeds(residual: f64, scale: f64, tol: f64) -> bool {
    residual.is_nan() || residual > tol * (1.0 + scale)
}

fn malformed(m: usize, n: usize, g: &SuperOperator, err: Error) -> NaturalityVerdict {
    NaturalityVerdict::Violation(Box::new(NaturalityViolation {
        kind: ProbeKind::Malformed,
        m,
        n,
        h: None,
        g: g.clone(),
        g2: None,
        residual: f64::INFINITY,
        message: Some(err.to_string()),
    }))
}

/// Probe `φ_n(h ∘ g) = h ∘ φ_m(g)` on random generators, then the cone-law
/// consequences: homogeneity for each scalar in [`SCALAR_PROBES`] and
/// additivity through `t ∘ pair_encode`.
pub fn check_naturality(family: &dyn NaturalFamily, cfg: &NaturalityConfig) -> NaturalityVerdict {
    let b = family.target().clone();
    let max = family.truncation();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = NaturalityReport::default();

    macro_rules! component {
        ($n:expr, $g:expr, $m:expr) => {
            match family.component($n, $g) {
                Ok(out) => out,
                Err(e) => return malformed($m, $n, $g, e),
            }
        };
    }

    for _ in 0..cfg.probes {
        let (generator, m, n, h) = random_generator(&mut rng, max);
        let g = random_cp_into(&mut rng, &b, m);
        let hg = h.compose(&g).expect("h starts at M_m");
        let lhs = component!(n, &hg, m);
        let inner = component!(m, &g, m);
        let rhs = match h.compose(&inner) {
            Ok(r) => r,
            Err(e) => return malformed(m, n, &g, e),
        };
        let residual = match lhs.distance(&rhs) {
            Ok(r) => r,
            Err(e) => return malformed(m, n, &g, e),
        };
        report.general_probes += 1;
        report.general_residual = report.general_residual.max(residual);
        if exceeds(residual, lhs.max_abs().max(rhs.max_abs()), cfg.tol) {
            return NaturalityVerdict::Violation(Box::new(NaturalityViolation {
                kind: ProbeKind::Naturality(generator),
                m,
                n,
                h: Some(h),
                g,
                g2: None,
                residual,
                message: None,
            }));
        }
    }

    for _ in 0..cfg.cone_probes {
        let n = rng.random_range(1..=max);
        let g = random_cp_into(&mut rng, &b, n);
        let base = component!(n, &g, n);
        for lambda in SCALAR_PROBES {
            let scaled = component!(n, &g.scale_real(lambda), n);
            let expected = base.scale_real(lambda);
            let residual = scaled.distance(&expected).unwrap_or(f64::INFINITY);
            report.scalar_residual = report.scalar_residual.max(residual);
            if exceeds(residual, expected.max_abs(), cfg.tol) {
                return NaturalityVerdict::Violation(Box::new(NaturalityViolation {
                    kind: ProbeKind::Scalar(lambda),
                    m: n,
                    n,
                    h: Some(scalar_map(n, lambda).expect("λ ≥ 0")),
                    g,
                    g2: None,
                    residual,
                    message: None,
                }));
            }
        }

        let g2 = random_cp_into(&mut rng, &b, n);
        let sum = match pair_encode(&g, &g2, cfg.tol)
            .and_then(|h| t_map(n)?.map().compose(&h))
        {
            Ok(s) => s,
            Err(e) => return malformed(n, n, &g, e),
        };
        let lhs = component!(n, &sum, n);
        let other = component!(n, &g2, n);
        let rhs = base.add(&other).expect("components share a shape");
        let residual = lhs.distance(&rhs).unwrap_or(f64::INFINITY);
        report.cone_probes += 1;
        report.additivity_residual = report.additivity_residual.max(residual);
        if exceeds(residual, rhs.max_abs(), cfg.tol) {
            return NaturalityVerdict::Violation(Box::new(NaturalityViolation {
                kind: ProbeKind::Additivity,
                m: 2 * n,
                n,
                h: Some(t_map(n).expect("n ≥ 1").into_map()),
                g,
                g2: Some(g2),
                residual,
                message: None,
            }));
        }
    }
    NaturalityVerdict::Pass(report)
}

/// Outcome of [`reconstruct_map_from_family`].
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub map: SuperOperator,
    pub naturality: NaturalityReport,
    /// Largest `‖φ_n(g) − g ∘ f‖` over the verification probes.
    pub max_residual: f64,
}

/// Recover the unique CP `f : A → B` with `φ_n(g) = g ∘ f`.
///
/// Requires `truncation ≥ total_dim(B)`, runs [`check_naturality`], sets
/// `f = P ∘ φ_d(ι)`, then checks `φ_n(g) = g ∘ f` on `ι` and on random CP
/// probes at every `n ≤ truncation`.
pub fn reconstruct_map_from_family(
    family: &dyn NaturalFamily,
    cfg: &NaturalityConfig,
) -> Result<Reconstruction> {
    let b = family.target().clone();
    let split = karoubi_idempotent(&b);
    if family.truncation() < split.dim {
        return Err(Error::TruncationTooSmall {
            truncation: family.truncation(),
            required: split.dim,
        });
    }
    let naturality = match check_naturality(family, cfg) {
        NaturalityVerdict::Pass(report) => report,
        NaturalityVerdict::Violation(v) => return Err(Error::NotNatural(v)),
    };
    let at_embedding = family.component(split.dim, &split.embedding)?;
    family.source().ensure_eq(at_embedding.domain())?;
    let f = split.compression.compose(&at_embedding)?;

    let mut max_residual: f64 = at_embedding.distance(&split.embedding.compose(&f)?)?;
    if exceeds(max_residual, at_embedding.max_abs(), cfg.tol) {
        return Err(Error::ReconstructionMismatch {
            n: split.dim,
            residual: max_residual,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let rounds = cfg.probes.div_ceil(family.truncation()).max(1);
    for n in 1..=family.truncation() {
        for _ in 0..rounds {
            let g = random_cp_into(&mut rng, &b, n);
            let got = family.component(n, &g)?;
            let expected = g.compose(&f)?;
            let residual = got.distance(&expected)?;
            max_residual = max_residual.max(residual);
            if exceeds(residual, expected.max_abs(), cfg.tol) {
                return Err(Error::ReconstructionMismatch { n, residual });
            }
        }
    }
    require_cp(&f, cfg.tol)?;
    Ok(Reconstruction {
        map: f,
        naturality,
        max_residual,
    })
}

/// `‖φ_d(ι) − ψ_d(ι)‖` at `d = total_dim(B)`: the probe that separates the
/// families of distinct maps.
pub fn family_gap_at_embedding(phi: &dyn NaturalFamily, psi: &dyn NaturalFamily) -> Result<f64> {
    phi.target().ensure_eq(psi.target())?;
    let split = karoubi_idempotent(phi.target());
    let a = phi.component(split.dim, &split.embedding)?;
    let b = psi.component(split.dim, &split.embedding)?;
    a.distance(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Element;
    use crate::linalg::{self, ONE, ZERO};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn alg(blocks: &[usize]) -> Algebra {
        Algebra::new(blocks).unwrap()
    }

    #[test]
    fn functor_f_examples() {
        let id = functor_f(&NMatMorphism::identity(3));
        assert_eq!(id, NCpMorphism::identity(3));

        let v = NMatMorphism::new(CMatrix::from_row_slice(2, 1, &[ONE, ZERO])).unwrap();
        let fv = functor_f(&v);
        assert_eq!((fv.source(), fv.target()), (1, 2));
        let a = C64::new(2.5, -1.0);
        let out = fv.map().apply(&Element::from_matrix(CMatrix::from_element(1, 1, a)).unwrap()).unwrap();
        let mut expected = CMatrix::zeros(2, 2);
        expected[(0, 0)] = a;
        assert_eq!(out.block(0), &expected);
        assert_eq!(nmat_dual(&v).matrix(), &v.matrix().transpose());
    }

    #[test]
    fn functor_f_is_contravariant() {
        let mut r = rng(0);
        let v = NMatMorphism::new(sample::matrix(&mut r, 2, 3)).unwrap();
        let w = NMatMorphism::new(sample::matrix(&mut r, 3, 2)).unwrap();
        let lhs = functor_f(&v.then(&w).unwrap());
        let rhs = functor_f(&v).compose(&functor_f(&w)).unwrap();
        assert!(lhs.map().distance(rhs.map()).unwrap() < 1e-11);
        assert!(v.then(&v).is_err());
    }

    #[test]
    fn ncp_morphism_validates() {
        assert!(NCpMorphism::new(transpose_map(2).unwrap(), 1e-9).is_err());
        assert!(NCpMorphism::new(SuperOperator::identity(&alg(&[1, 1])), 1e-9).is_err());
        assert!(NCpMorphism::new(SuperOperator::identity(&alg(&[2])), 1e-9).is_ok());
    }

    #[test]
    fn structural_maps() {
        let mut r = rng(1);
        for n in 1..=3 {
            let j = j_map(n).unwrap();
            let jj = j.compose(&j).unwrap();
            assert!(jj.map().distance(j.map()).unwrap() == 0.0);
            let t = t_map(n).unwrap();
            let id = SuperOperator::identity(&Algebra::matrix(n));
            assert_eq!(t.compose(&p_map(n).unwrap()).unwrap().map(), &id);
            assert_eq!(t.compose(&q_map(n).unwrap()).unwrap().map(), &id);
            assert_eq!(t.compose(&r_map(n).unwrap()).unwrap().map(), &id.scale_real(2.0));
            assert_eq!(j.compose(&p_map(n).unwrap()).unwrap(), p_map(n).unwrap());
            assert_eq!(j.compose(&q_map(n).unwrap()).unwrap(), q_map(n).unwrap());

            // t(diag(a, d)) = a + d and j zeroes the off-diagonal blocks.
            let x = sample::element(&mut r, &Algebra::matrix(2 * n));
            let m = x.block(0);
            let tx = t.map().apply(&x).unwrap();
            let expected = m.view((0, 0), (n, n)) + m.view((n, n), (n, n));
            assert!(linalg::max_abs_diff(tx.block(0), &expected) < 1e-13);
            let jx = j.map().apply(&x).unwrap();
            assert!(jx.block(0).view((0, n), (n, n)).iter().all(|z| *z == ZERO));
            assert_eq!(jx.block(0).view((n, n), (n, n)), m.view((n, n), (n, n)));
        }
        assert!(j_map(0).is_err());
    }

    #[test]
    fn pair_encoding() {
        let mut r = rng(2);
        let a = alg(&[2, 1]);
        let z = SuperOperator::zero(&a, &Algebra::matrix(2));
        let h0 = pair_encode(&z, &z, 1e-9).unwrap();
        assert!(h0.max_abs() == 0.0);

        let f = sample::cp_map(&mut r, &a, &Algebra::matrix(2), 2);
        let g = sample::cp_map(&mut r, &a, &Algebra::matrix(2), 1);
        let h = pair_encode(&f, &g, 1e-9).unwrap();
        assert!(is_completely_positive(&h, 1e-9).completely_positive);
        let (f2, g2) = pair_decode(&h, 1e-9).unwrap();
        assert_eq!((f2.distance(&f).unwrap(), g2.distance(&g).unwrap()), (0.0, 0.0));
        let sum = t_map(2).unwrap().map().compose(&h).unwrap();
        assert!(sum.distance(&f.add(&g).unwrap()).unwrap() < 1e-11);

        // A CP map into M_4 with off-diagonal blocks is not j-fixed.
        let full = sample::cp_map(&mut r, &a, &Algebra::matrix(4), 1);
        assert!(matches!(pair_decode(&full, 1e-9), Err(Error::NotJFixed { .. })));
        assert!(pair_encode(&f, &transpose_map(2).unwrap().compose(&f).unwrap(), 1e-9).is_err());
    }

    #[test]
    fn karoubi_examples() {
        let m3 = karoubi_idempotent(&Algebra::matrix(3));
        assert_eq!(m3.idempotent, NCpMorphism::identity(3));

        let c2 = karoubi_idempotent(&alg(&[1, 1]));
        assert_eq!(c2.dim, 2);
        assert!(c2.idempotent.map().distance(j_map(1).unwrap().map()).unwrap() < 1e-15);

        let a = alg(&[2, 3]);
        let s = karoubi_idempotent(&a);
        let e = s.idempotent.map();
        assert!(e.compose(e).unwrap().distance(e).unwrap() <= 1e-12);
        assert_eq!(s.compression.compose(&s.embedding).unwrap(), SuperOperator::identity(&a));
        assert!(is_completely_positive(&s.embedding, 1e-9).completely_positive);
        assert!(is_completely_positive(&s.compression, 1e-9).completely_positive);
        // ι is multiplicative.
        let mut r = rng(3);
        let (x, y) = (sample::element(&mut r, &a), sample::element(&mut r, &a));
        let lhs = s.embedding.apply(&x.mul(&y).unwrap()).unwrap();
        let rhs = s.embedding.apply(&x).unwrap().mul(&s.embedding.apply(&y).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn state_correspondence_trivial_order() {
        // n = 1: the state is the map itself.
        let mut r = rng(4);
        let a = alg(&[2, 1]);
        let rho = sample::positive_element(&mut r, &a);
        let s = Functional::from_density(rho);
        let f = state_to_cpmap(&s, &a, 1, 1e-9).unwrap();
        for _ in 0..4 {
            let x = sample::element(&mut r, &a);
            let lhs = f.apply(&x).unwrap().block(0)[(0, 0)];
            assert!((lhs - s.eval(&x).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn maximally_entangled_state_gives_identity() {
        for m in 1..=3 {
            let grid = MatrixAlgebra::new(&Algebra::matrix(m), m).unwrap();
            // Ω Ω* with Ω = Σ_i e_i ⊗ e_i.
            let mut omega = crate::linalg::CVector::zeros(m * m);
            for i in 0..m {
                omega[i * m + i] = ONE;
            }
            let rho = Element::rank_one(grid.algebra(), 0, &omega).unwrap();
            let f = state_to_cpmap(&Functional::from_density(rho), &Algebra::matrix(m), m, 1e-9).unwrap();
            assert!(f.distance(&SuperOperator::identity(&Algebra::matrix(m))).unwrap() < 1e-14);
        }
    }

    #[test]
    fn state_round_trip_and_positivity() {
        let mut r = rng(5);
        for (a, n) in [(alg(&[2]), 2), (alg(&[1, 1]), 3), (alg(&[2, 1]), 2)] {
            let f = sample::cp_map(&mut r, &a, &Algebra::matrix(n), 2);
            let s = cpmap_to_state(&f, 1e-9).unwrap();
            assert!(s.is_positive(1e-9));
            let back = state_to_cpmap(&s, &a, n, 1e-9).unwrap();
            assert!(back.distance(&f).unwrap() < 1e-11);
            assert!(choi_element(&f).unwrap().is_positive(1e-9));
        }
        let t = transpose_map(2).unwrap();
        assert!(!choi_element(&t).unwrap().is_positive(1e-9));
        assert!(matches!(cpmap_to_state(&t, 1e-9), Err(Error::NotCompletelyPositive { .. })));
        let neg = Functional::from_density(Element::identity(&Algebra::matrix(4)).scale_real(-1.0));
        assert!(matches!(
            state_to_cpmap(&neg, &Algebra::matrix(2), 2, 1e-9),
            Err(Error::NotPositiveFunctional { .. })
        ));
    }

    #[test]
    fn representable_family_basics() {
        let mut r = rng(6);
        let a = alg(&[2]);
        let id = natural_family_from_map(&SuperOperator::identity(&a), None, 1e-9).unwrap();
        let g = sample::cp_map(&mut r, &a, &Algebra::matrix(2), 1);
        assert_eq!(id.component(2, &g).unwrap(), g);

        let b = alg(&[1, 1]);
        let f = sample::cp_map(&mut r, &a, &b, 2);
        let fam = natural_family_from_map(&f, None, 1e-9).unwrap();
        assert_eq!(fam.truncation(), 2);
        let v = sample::matrix(&mut r, 2, 2);
        let g = conjugation_map(&v).unwrap().compose(&block_embedding(&b)).unwrap();
        assert_eq!(fam.component(2, &g).unwrap(), g.compose(&f).unwrap());
        assert!(fam.component(3, &g).is_err());
        assert!(natural_family_from_map(&transpose_map(2).unwrap(), None, 1e-9).is_err());
        assert!(check_naturality(&fam, &NaturalityConfig::default()).passed());
    }

    #[test]
    fn perturbed_families_fail_naturality() {
        for name in Perturbation::NAMES {
            let fam = builtin_family(name, &alg(&[2]), &alg(&[1, 1]), 3, None).unwrap();
            match check_naturality(fam.as_ref(), &NaturalityConfig::default()) {
                NaturalityVerdict::Violation(v) => assert!(v.residual > 1e-9, "{name}"),
                NaturalityVerdict::Pass(_) => panic!("{name} passed"),
            }
        }
    }

    #[test]
    fn reconstruct_examples() {
        let id = natural_family_from_map(&SuperOperator::identity(&alg(&[2])), None, 1e-9).unwrap();
        let rec = reconstruct_map_from_family(&id, &NaturalityConfig::default()).unwrap();
        assert!(rec.map.distance(&SuperOperator::identity(&alg(&[2]))).unwrap() < 1e-12);

        let mut r = rng(7);
        let (a, b) = (alg(&[1, 2]), alg(&[2, 1]));
        let f = sample::cp_map(&mut r, &a, &b, 3);
        let fam = natural_family_from_map(&f, None, 1e-9).unwrap();
        let rec = reconstruct_map_from_family(&fam, &NaturalityConfig::default()).unwrap();
        assert!(rec.map.distance(&f).unwrap() < 1e-9);

        let short = natural_family_from_map(&f, Some(2), 1e-9).unwrap();
        assert!(matches!(
            reconstruct_map_from_family(&short, &NaturalityConfig::default()),
            Err(Error::TruncationTooSmall { truncation: 2, required: 3 })
        ));
        let bad = builtin_family("twist-transpose", &a, &b, 0, None).unwrap();
        assert!(matches!(
            reconstruct_map_from_family(bad.as_ref(), &NaturalityConfig::default()),
            Err(Error::NotNatural(_))
        ));
    }

    #[test]
    fn distinct_maps_have_distinct_families() {
        let mut r = rng(8);
        let (a, b) = (alg(&[2]), alg(&[1, 2]));
        let f = sample::cp_map(&mut r, &a, &b, 2);
        let f2 = sample::cp_map(&mut r, &a, &b, 2);
        let (p, q) = (
            natural_family_from_map(&f, None, 1e-9).unwrap(),
            natural_family_from_map(&f2, None, 1e-9).unwrap(),
        );
        let gap = family_gap_at_embedding(&p, &q).unwrap();
        assert!((gap - f.distance(&f2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn amplification_family_of_cp_map_is_positive() {
        let mut r = rng(9);
        let (a, b) = (alg(&[2]), alg(&[1, 1]));
        let f = sample::cp_map(&mut r, &a, &b, 2);
        assert_eq!(f.amplify(1).unwrap(), f);
        for n in 1..=3 {
            assert!(is_completely_positive(&f.amplify(n).unwrap(), 1e-9).completely_positive);
        }
    }
}
