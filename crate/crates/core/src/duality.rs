//! Positive functionals under the trace pairing, and the constructive side of
//! cone duality: extending a cone map on positive functionals to a linear map
//! and recovering the positive map it is precomposition by.
//!
//! A functional on `A` is stored by its density `ρ ∈ A` with `φ(a) = tr(ρ a)`.
//! Positive functionals have positive densities and Hermitian functionals have
//! Hermitian densities, so the predual collapses onto `A` itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, Element};
use crate::cpmaps::SuperOperator;
use crate::error::{ConeLaw, Error, Result};
use crate::linalg::{self, C64, I};
use crate::sample;

#[derive(Clone, Debug, PartialEq)]
pub struct Functional {
    density: Element,
}

impl Functional {
    pub fn from_density(density: Element) -> Self {
        Self { density }
    }

    /// Functional with `φ(E_pq) = form(E_pq)` on every matrix unit; the density
    /// entry `ρ[q, p]` is exactly that value.
    pub fn from_linear_form(algebra: &Algebra, form: impl Fn(&Element) -> Result<C64>) -> Result<Self> {
        let mut blocks: Vec<_> = Element::zero(algebra).blocks().to_vec();
        for k in 0..algebra.vec_dim() {
            let (b, p, q) = algebra.basis_position(k);
            blocks[b][(q, p)] = form(&Element::basis(algebra, k))?;
        }
        Ok(Self::from_density(Element::new(algebra.clone(), blocks)?))
    }

    pub fn density(&self) -> &Element {
        &self.density
    }

    pub fn into_density(self) -> Element {
        self.density
    }

    pub fn algebra(&self) -> &Algebra {
        self.density.algebra()
    }

    /// Normalized trace `tr(a)/d` on `M_{n_1} ⊕ ...`.
    pub fn normalized_trace(algebra: &Algebra) -> Self {
        Self::from_density(Element::identity(algebra).scale_real(1.0 / algebra.total_dim() as f64))
    }

    pub fn zero(algebra: &Algebra) -> Self {
        Self::from_density(Element::zero(algebra))
    }

    /// `φ(a) = tr(ρ a)`.
    pub fn eval(&self, a: &Element) -> Result<C64> {
        Ok(self.density.mul(a)?.trace())
    }

    pub fn add(&self, other: &Functional) -> Result<Functional> {
        Ok(Self::from_density(self.density.add(&other.density)?))
    }

    pub fn sub(&self, other: &Functional) -> Result<Functional> {
        Ok(Self::from_density(self.density.sub(&other.density)?))
    }

    pub fn scale(&self, alpha: C64) -> Functional {
        Self::from_density(self.density.scale(alpha))
    }

    pub fn scale_real(&self, alpha: f64) -> Functional {
        Self::from_density(self.density.scale_real(alpha))
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.density.is_positive(tol)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.density.is_hermitian(tol)
    }

    pub fn max_abs_diff(&self, other: &Functional) -> Result<f64> {
        self.density.max_abs_diff(&other.density)
    }

    /// Rescale to `φ(1) = 1`; `None` when `φ(1)` vanishes.
    pub fn normalized(&self) -> Option<Functional> {
        let total = self.density.trace();
        if total.norm() <= f64::EPSILON {
            None
        } else {
            Some(self.scale(total.inv()))
        }
    }

    /// `φ ∘ f`; the density is `f†(ρ)` for the trace-pairing adjoint.
    pub fn precompose(&self, f: &SuperOperator) -> Result<Functional> {
        f.codomain().ensure_eq(self.algebra())?;
        Ok(Self::from_density(f.dual().apply(&self.density)?))
    }

    /// `(Re φ, Im φ)` with `φ = Re φ + i Im φ`, both Hermitian.
    pub fn hermitian_parts(&self) -> (Functional, Functional) {
        let rho = &self.density;
        let re = rho.hermitian_part();
        let im = rho
            .sub(&rho.adjoint())
            .expect("same algebra")
            .scale(C64::new(0.0, -0.5));
        (Self::from_density(re), Self::from_density(im))
    }

    /// `φ = φ₊ − φ₋` with positive, mutually orthogonal densities.
    pub fn jordan_decompose(&self, tol: f64) -> Result<(Functional, Functional)> {
        let (p, m) = self.density.positive_decomposition(tol)?;
        Ok((Self::from_density(p), Self::from_density(m)))
    }
}

/// States `v v*` for the polarization vectors of every block. They span the
/// Hermitian part of the algebra, so they separate linear maps into it.
pub fn probe_states(algebra: &Algebra) -> Vec<Functional> {
    let mut out = Vec::with_capacity(algebra.vec_dim());
    for (b, &n) in algebra.blocks().iter().enumerate() {
        for v in linalg::polarization_vectors(n) {
            out.push(Functional::from_density(
                Element::rank_one(algebra, b, &v).expect("vector fits block"),
            ));
        }
    }
    out
}

/// A function from positive functionals on `source` to positive functionals
/// on `target`, supplied as a black box. Implementations must be reentrant.
pub trait ConeMap: Sync {
    fn source(&self) -> &Algebra;
    fn target(&self) -> &Algebra;
    fn eval(&self, phi: &Functional) -> Result<Functional>;
}

/// `φ ↦ φ ∘ f` for a map `f : A → B`; a cone map from `B` to `A`.
#[derive(Clone, Debug)]
pub struct InducedConeMap {
    map: SuperOperator,
}

impl InducedConeMap {
    pub fn new(map: SuperOperator) -> Self {
        Self { map }
    }
}

impl ConeMap for InducedConeMap {
    fn source(&self) -> &Algebra {
        self.map.codomain()
    }

    fn target(&self) -> &Algebra {
        self.map.domain()
    }

    fn eval(&self, phi: &Functional) -> Result<Functional> {
        phi.precompose(&self.map)
    }
}

type ConeFn = dyn Fn(&Functional) -> Result<Functional> + Send + Sync;

/// A cone map given by a closure.
pub struct FnConeMap {
    source: Algebra,
    target: Algebra,
    f: Box<ConeFn>,
}

impl FnConeMap {
    pub fn new(
        source: Algebra,
        target: Algebra,
        f: impl Fn(&Functional) -> Result<Functional> + Send + Sync + 'static,
    ) -> Self {
        Self {
            source,
            target,
            f: Box::new(f),
        }
    }
}

impl ConeMap for FnConeMap {
    fn source(&self) -> &Algebra {
        &self.source
    }

    fn target(&self) -> &Algebra {
        &self.target
    }

    fn eval(&self, phi: &Functional) -> Result<Functional> {
        (self.f)(phi)
    }
}

/// Sampling parameters for the cone-law checks.
#[derive(Clone, Debug)]
pub struct ExtensionConfig {
    pub tol: f64,
    /// Random positive functionals sampled on top of the probe states.
    pub samples: usize,
    /// Alternative decompositions tried per Hermitian sample.
    pub decompositions: usize,
    pub seed: u64,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        Self {
            tol: crate::DEFAULT_TOL,
            samples: 8,
            decompositions: 10,
            seed: 0,
        }
    }
}

/// The linear extension of a cone map, stored as a map on densities.
#[derive(Clone, Debug)]
pub struct ConeExtension {
    map: SuperOperator,
}

impl ConeExtension {
    /// Density-level map from `source` to `target`.
    pub fn density_map(&self) -> &SuperOperator {
        &self.map
    }

    pub fn eval(&self, phi: &Functional) -> Result<Functional> {
        Ok(Functional::from_density(self.map.apply(phi.density())?))
    }
}

fn cone_violation(law: ConeLaw, residual: f64, detail: impl Into<String>) -> Error {
    Error::NotConeHomomorphism {
        law,
        residual,
        detail: detail.into(),
    }
}

fn checked_eval(g: &dyn ConeMap, phi: &Functional) -> Result<Functional> {
    let out = g.eval(phi)?;
    if out.algebra() != g.target() {
        return Err(cone_violation(
            ConeLaw::Shape,
            f64::INFINITY,
            format!("output lives on {}, expected {}", out.algebra(), g.target()),
        ));
    }
    Ok(out)
}

fn within(residual: f64, scale: f64, tol: f64) -> bool {
    residual <= tol * (1.0 + scale)
}

/// Unit-scale random positive functional.
fn random_state<R: Rng>(rng: &mut R, algebra: &Algebra) -> Functional {
    let x = sample::positive_element(rng, algebra);
    let norm = x.norm().max(f64::MIN_POSITIVE);
    Functional::from_density(x.scale_real(1.0 / norm))
}

/// `g(σ₊) − g(σ₋)` for a Hermitian `σ`.
fn hermitian_extension(g: &dyn ConeMap, sigma: &Functional, tol: f64) -> Result<Functional> {
    let (p, m) = sigma.jordan_decompose(tol)?;
    checked_eval(g, &p)?.sub(&checked_eval(g, &m)?)
}

/// `g(Re φ₊) − g(Re φ₋) + i (g(Im φ₊) − g(Im φ₋))`.
fn complex_extension(g: &dyn ConeMap, phi: &Functional, tol: f64) -> Result<Functional> {
    let (re, im) = phi.hermitian_parts();
    let a = hermitian_extension(g, &re, tol)?;
    let b = hermitian_extension(g, &im, tol)?;
    a.add(&b.scale(I))
}

/// Verify the cone laws on samples, then extend `g` linearly through the
/// Jordan decomposition and complexify.
///
/// Checked before extending: zero, positivity, positive homogeneity and
/// additivity on sampled positive functionals. Checked after: agreement of
/// `g(ψ₊) − g(ψ₋)` over alternative decompositions `ψ± = σ± + τ`, and that the
/// tabulated linear map reproduces the direct formula on fresh samples.
pub fn extend_cone_map(g: &dyn ConeMap, cfg: &ExtensionConfig) -> Result<ConeExtension> {
    let src = g.source().clone();
    let tol = cfg.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let g0 = checked_eval(g, &Functional::zero(&src))?;
    let r0 = g0.density().max_abs();
    if !within(r0, 0.0, tol) {
        return Err(cone_violation(ConeLaw::Zero, r0, "g(0) ≠ 0"));
    }

    let mut states = probe_states(&src);
    states.extend((0..cfg.samples).map(|_| random_state(&mut rng, &src)));
    let images: Vec<Functional> = states
        .iter()
        .map(|phi| checked_eval(g, phi))
        .collect::<Result<_>>()?;

    for (k, out) in images.iter().enumerate() {
        if !out.is_positive(tol) {
            let (_, ev) = out.density().min_eigenvalue();
            return Err(cone_violation(
                ConeLaw::Positivity,
                -ev,
                format!("image of sample {k} is not positive"),
            ));
        }
    }

    for (k, (phi, out)) in states.iter().zip(&images).enumerate() {
        for alpha in [0.5, 2.0, 3.25] {
            let lhs = checked_eval(g, &phi.scale_real(alpha))?;
            let rhs = out.scale_real(alpha);
            let res = lhs.max_abs_diff(&rhs)?;
            if !within(res, rhs.density().max_abs(), tol) {
                return Err(cone_violation(
                    ConeLaw::Homogeneity,
                    res,
                    format!("g({alpha}·φ_{k}) ≠ {alpha}·g(φ_{k})"),
                ));
            }
        }
    }

    for k in 0..states.len() {
        let l = (k * 7 + 3) % states.len();
        let lhs = checked_eval(g, &states[k].add(&states[l])?)?;
        let rhs = images[k].add(&images[l])?;
        let res = lhs.max_abs_diff(&rhs)?;
        if !within(res, rhs.density().max_abs(), tol) {
            return Err(cone_violation(
                ConeLaw::Additivity,
                res,
                format!("g(φ_{k} + φ_{l}) ≠ g(φ_{k}) + g(φ_{l})"),
            ));
        }
    }

    let map = SuperOperator::from_fn(&src, g.target(), |rho| {
        Ok(complex_extension(g, &Functional::from_density(rho.clone()), tol)?.into_density())
    })?;
    let ext = ConeExtension { map };

    for k in 0..cfg.samples.max(1) {
        let sigma = Functional::from_density(sample::hermitian_element(&mut rng, &src));
        let direct = hermitian_extension(g, &sigma, tol)?;
        let (p, m) = sigma.jordan_decompose(tol)?;
        for _ in 0..cfg.decompositions {
            let tau = random_state(&mut rng, &src).scale_real(rng.random_range(0.1..3.0));
            let alt = checked_eval(g, &p.add(&tau)?)?.sub(&checked_eval(g, &m.add(&tau)?)?)?;
            let res = alt.max_abs_diff(&direct)?;
            if !within(res, direct.density().max_abs(), tol) {
                return Err(cone_violation(
                    ConeLaw::WellDefined,
                    res,
                    format!("Hermitian sample {k}: decompositions disagree"),
                ));
            }
        }
        let tabulated = ext.eval(&sigma)?;
        let res = tabulated.max_abs_diff(&direct)?;
        if !within(res, direct.density().max_abs(), tol) {
            return Err(cone_violation(
                ConeLaw::Linearity,
                res,
                format!("Hermitian sample {k}: extension is not linear"),
            ));
        }
    }
    Ok(ext)
}

/// Recover `f : A → B` with `φ ∘ f = g(φ)` from a cone map `g` between
/// positive functionals on `B` and on `A`.
///
/// `f` is the trace-pairing adjoint of the linear extension of `g`. The result
/// is checked against `g` on the probe states and for positivity on samples.
pub fn reconstruct_positive_map(g: &dyn ConeMap, cfg: &ExtensionConfig) -> Result<SuperOperator> {
    let ext = extend_cone_map(g, cfg)?;
    let f = ext.density_map().dual();
    let tol = cfg.tol;
    for (k, phi) in probe_states(g.source()).iter().enumerate() {
        let expected = checked_eval(g, phi)?;
        let res = phi.precompose(&f)?.max_abs_diff(&expected)?;
        if !within(res, expected.density().max_abs(), tol) {
            return Err(cone_violation(
                ConeLaw::Linearity,
                res,
                format!("reconstructed map disagrees with g on probe state {k}"),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    for _ in 0..cfg.samples.max(1) {
        let x = sample::positive_element(&mut rng, g.target());
        let y = f.apply(&x)?;
        if !y.is_positive(tol) {
            let (_, ev) = y.min_eigenvalue();
            return Err(cone_violation(
                ConeLaw::Positivity,
                -ev,
                "reconstructed map sends a positive element outside the cone",
            ));
        }
    }
    Ok(f)
}

/// First probe state on `B` that tells `f` and `g` apart, with the residual.
pub fn separating_functional(
    f: &SuperOperator,
    g: &SuperOperator,
    tol: f64,
) -> Result<Option<(usize, Functional, f64)>> {
    f.domain().ensure_eq(g.domain())?;
    f.codomain().ensure_eq(g.codomain())?;
    for (k, phi) in probe_states(f.codomain()).into_iter().enumerate() {
        let res = phi.precompose(f)?.max_abs_diff(&phi.precompose(g)?)?;
        if res > tol {
            return Ok(Some((k, phi, res)));
        }
    }
    Ok(None)
}

/// Names accepted by [`builtin_nonadditive`].
pub const NONADDITIVE_BUILTINS: [&str; 3] = ["square-mass", "top-eigenvalue", "frobenius"];

/// A seeded cone-map-shaped black box that fails additivity: `φ ∘ f₀` plus a
/// nonlinear multiple of a fixed positive functional `τ`.
pub fn builtin_nonadditive(name: &str, a: &Algebra, b: &Algebra, seed: u64) -> Result<FnConeMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = sample::cp_map(&mut rng, a, b, 2);
    let tau = random_state(&mut rng, a);
    let weight: fn(&Element) -> f64 = match name {
        "square-mass" => |rho| rho.trace().re.powi(2),
        "top-eigenvalue" => |rho| rho.spectra().iter().map(|(v, _)| *v.last().unwrap()).fold(0.0, f64::max),
        "frobenius" => |rho| rho.blocks().iter().map(|m| m.norm_squared()).sum::<f64>().sqrt(),
        other => return Err(Error::InvalidArgument(format!("unknown cone builtin `{other}`"))),
    };
    // On a one-dimensional source the cone is a ray and a degree-1 weight is linear.
    if b.vec_dim() == 1 && name != "square-mass" {
        return Err(Error::InvalidArgument(format!(
            "`{name}` is additive on the one-dimensional cone of {b}"
        )));
    }
    Ok(FnConeMap::new(b.clone(), a.clone(), move |phi| {
        let base = phi.precompose(&f0)?;
        base.add(&tau.scale_real(weight(phi.density())))
    }))
}
