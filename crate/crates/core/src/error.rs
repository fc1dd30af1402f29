use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the reduction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MorError {
    #[error("shifted pencil sE - A is numerically singular at s = {0}")]
    SingularShift(Complex64),

    #[error("dimension {n} exceeds the dense cap {cap}")]
    DimensionTooLarge { n: usize, cap: usize },

    #[error("interpolation basis is rank deficient: {0}")]
    RankDeficient(String),

    #[error("reduced pencil is singular at the interpolation points")]
    SingularPencil,

    #[error("realization is not conjugate closed (imaginary residue {0:.3e})")]
    NotConjugateClosed(f64),

    #[error("reduced model has repeated poles (gap {0:.3e})")]
    RepeatedPoles(f64),

    #[error("family denominator 1 - d_r G3(s) vanishes at s = {0}")]
    FamilyPole(Complex64),

    #[error("explicit d_r denominator is degenerate ({0:.3e})")]
    DegenerateDenominator(f64),

    #[error("duplicate sample points at indices {0} and {1}")]
    DuplicatePoints(usize, usize),

    #[error("surrogate descriptor matrix E_k is singular")]
    SingularEk,

    #[error("system is not asymptotically stable (max Re(pole) = {0:.3e})")]
    UnstableSystem(f64),

    #[error("system is not strictly proper (d = {0})")]
    NonProper(f64),

    #[error("every probed d_r was rejected as destabilizing")]
    NoStableDr,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("E is singular")]
    SingularE,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{0} failed to converge")]
    NoConvergence(&'static str),
}

pub type Result<T> = std::result::Result<T, MorError>;
