//! Seeded random generators for elements, matrices and CP maps.
//!
//! Every generator takes the RNG explicitly; nothing here holds state.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{Algebra, Element};
use crate::cpmaps::{map_from_kraus, SuperOperator};
use crate::linalg::{CMatrix, CVector, C64};

pub fn complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| complex(rng));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

pub fn element<R: Rng + ?Sized>(rng: &mut R, algebra: &Algebra) -> Element {
    let blocks = algebra.blocks().iter().map(|&n| matrix(rng, n, n)).collect();
    Element::new(algebra.clone(), blocks).expect("blocks conform by construction")
}

pub fn hermitian_element<R: Rng + ?Sized>(rng: &mut R, algebra: &Algebra) -> Element {
    element(rng, algebra).hermitian_part()
}

/// `y* y` for a random `y`.
pub fn positive_element<R: Rng + ?Sized>(rng: &mut R, algebra: &Algebra) -> Element {
    let y = element(rng, algebra);
    y.adjoint().mul(&y).expect("same algebra")
}

/// Random CP map built from `kraus` Gaussian Kraus operators between the
/// block-diagonal envelopes of the two algebras.
pub fn cp_map<R: Rng + ?Sized>(rng: &mut R, domain: &Algebra, codomain: &Algebra, kraus: usize) -> SuperOperator {
    let ops: Vec<CMatrix> = (0..kraus)
        .map(|_| matrix(rng, domain.total_dim(), codomain.total_dim()))
        .collect();
    map_from_kraus(domain, codomain, &ops).expect("Kraus shapes conform by construction")
}

/// Arbitrary (generally not positive) linear map.
pub fn linear_map<R: Rng + ?Sized>(rng: &mut R, domain: &Algebra, codomain: &Algebra) -> SuperOperator {
    SuperOperator::new(
        domain.clone(),
        codomain.clone(),
        matrix(rng, codomain.vec_dim(), domain.vec_dim()),
    )
    .expect("shape conforms by construction")
}
