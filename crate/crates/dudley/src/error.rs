use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("space dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("direction is not a unit vector (norm {0})")]
    NonUnitDirection(f64),
    #[error("not a Lorentz element: {0}")]
    InvalidElement(String),
    #[error("argument outside the logarithm neighborhood (distance {0} from identity)")]
    OutsideLogNeighborhood(f64),
    #[error("degenerate input (pivot {0})")]
    Degenerate(f64),
    #[error("invalid Levy specification: {0}")]
    InvalidSpec(String),
    #[error("tail integral of r nu(dr) over [1, inf) diverges: alpha is +inf")]
    NotTailIntegrable,
    #[error("infinite activity measure needs a truncation threshold")]
    InfiniteActivity,
    #[error("invalid simulation parameters: {0}")]
    InvalidParameters(String),
    #[error("zero vector where a nonzero one is required")]
    ZeroVector,
    #[error("element is not in the required subspace (residual {0})")]
    NotInSubspace(f64),
}
