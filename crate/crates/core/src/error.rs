use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mesh resolution must be at least 1")]
    ZeroResolution,
    #[error("degenerate triangle (signed area {0:e})")]
    DegenerateTriangle(f64),
    #[error("edge {0} is a boundary edge and has no jump")]
    BoundaryEdge(usize),
    #[error("polynomial degree {0} is not supported (only k = 1 is implemented)")]
    UnsupportedDegree(usize),
    #[error("point lies outside sub-triangle {sub} (barycentric coordinate {bary:e})")]
    PointOutside { sub: usize, bary: f64 },
    #[error("spaces are incompatible: {0}")]
    SpaceMismatch(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("quadrature degree {requested} is below the required minimum {minimum}")]
    QuadratureTooLow { requested: usize, minimum: usize },
    #[error("mass block {block} is not symmetric positive definite")]
    NotPositiveDefinite { block: usize },
    #[error("mass matrix couples degrees of freedom {row} and {col} across blocks")]
    NotBlockDiagonal { row: usize, col: usize },
    #[error("linear solve failed: singular factorization ({0})")]
    Singular(&'static str),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("diffusivity must be positive and finite, got {0}")]
    InvalidDiffusivity(f64),
    #[error("splitting parameter theta must lie in [0, 1], got {0}")]
    InvalidTheta(f64),
    #[error("unknown experiment id {0}")]
    UnknownExperiment(u32),
    #[error("errors must be positive to compute an order (got {0:e}, {1:e})")]
    NonPositiveError(f64, f64),
    #[error("convection field is declared divergence free but |div b| = {0:e}")]
    NotDivergenceFree(f64),
}
