use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameter: {0}")]
    MeshParameter(String),

    #[error("inconsistent cell {cell}: {reason}")]
    InconsistentCell { cell: usize, reason: String },

    #[error("mesh file, line {line}: {reason}")]
    MeshFormat { line: usize, reason: String },

    #[error("non-simplex element (gmsh type {0})")]
    NonSimplexElement(u32),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported quadrature degree {0} (maximum is 6)")]
    UnsupportedDegree(usize),

    #[error("{0}")]
    Unsupported(String),

    #[error("coefficient vector has length {found}, space has {expected} DOFs")]
    CoefficientLength { expected: usize, found: usize },

    #[error("cell index {0} out of range")]
    CellOutOfRange(usize),

    #[error("matrix is not positive definite (pivot {pivot:e} in block {block})")]
    NotPositiveDefinite { block: usize, pivot: f64 },

    #[error("{method} did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },
}
