use std::fmt;

use thiserror::Error;

use crate::algebra::Algebra;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Cone-map law that an evaluation contract failed to respect.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeLaw {
    Zero,
    Positivity,
    Homogeneity,
    Additivity,
    WellDefined,
    Linearity,
    Shape,
}

impl fmt::Display for ConeLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConeLaw::Zero => "preservation of zero",
            ConeLaw::Positivity => "positivity",
            ConeLaw::Homogeneity => "positive homogeneity",
            ConeLaw::Additivity => "additivity",
            ConeLaw::WellDefined => "independence of the decomposition",
            ConeLaw::Linearity => "linearity of the extension",
            ConeLaw::Shape => "output algebra",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("block list is empty")]
    EmptyBlockList,
    #[error("block {index} has dimension 0; every block must be at least 1")]
    NonPositiveBlockDim { index: usize },
    #[error("algebra mismatch: expected {expected}, found {found}")]
    AlgebraMismatch { expected: Algebra, found: Algebra },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("element is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("operation requires single-block algebras, got {domain} -> {codomain}; use the state correspondence for direct sums")]
    MultiBlockUnsupported { domain: Algebra, codomain: Algebra },
    #[error("map is not completely positive (most negative Choi eigenvalue {min_eigenvalue:.6e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },
    #[error("functional is not positive (most negative density eigenvalue {min_eigenvalue:.6e})")]
    NotPositiveFunctional { min_eigenvalue: f64 },
    #[error("not a cone homomorphism: {law} violated (residual {residual:.3e}) {detail}")]
    NotConeHomomorphism {
        law: ConeLaw,
        residual: f64,
        detail: String,
    },
    #[error("map is not fixed by j (residual {residual:.3e})")]
    NotJFixed { residual: f64 },
    #[error("truncation {truncation} is below the required {required}")]
    TruncationTooSmall { truncation: usize, required: usize },
    #[error("family is not natural: {0}")]
    NotNatural(Box<crate::presheaf::NaturalityViolation>),
    #[error("family is not precomposition by the reconstructed map at n = {n} (residual {residual:.3e})")]
    ReconstructionMismatch { n: usize, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
