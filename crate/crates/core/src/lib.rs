//! Finite-dimensional C*-algebras and the completely positive maps between them.
//!
//! Algebras are direct sums of full matrix blocks. Linear maps between them are
//! stored as superoperators in the matrix-unit basis. On top of that sit the
//! Choi and Kraus representations, positive functionals with the trace pairing,
//! and the presheaf layer: natural families of hom-set functions into matrix
//! algebras, and the algorithm that recovers a CP map from such a family.

pub mod algebra;
pub mod cpmaps;
pub mod demo;
pub mod duality;
pub mod error;
pub mod io;
pub mod linalg;
pub mod presheaf;
pub mod sample;

pub use algebra::{Algebra, Element, MatrixAlgebra, Positivity};
pub use cpmaps::{
    conjugation_map, scalar_map, transpose_map, ChoiElement, CpVerdict, LemmaReport,
    MapPositivity, SuperOperator,
};
pub use duality::{ConeMap, Functional};
pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use presheaf::{NCpMorphism, NMatMorphism, NaturalFamily};

/// Default tolerance for positivity and complete-positivity decisions.
pub const DEFAULT_TOL: f64 = 1e-9;
