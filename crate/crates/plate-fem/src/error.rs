use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum FemError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("spaces do not form a coarse/fine pair: {0}")]
    InvalidPair(String),

    #[error("point ({0}, {1}) lies outside the domain")]
    OutOfDomain(f64, f64),

    #[error("degenerate geometry: {0}")]
    NumericDegeneracy(String),

    #[error("singular matrix in {block}")]
    SingularMatrix { block: String },

    #[error("fewer than {requested} positive finite eigenvalues available (found {found})")]
    InsufficientSpectrum { requested: usize, found: usize },

    #[error("eigensolver did not converge in {iterations} iterations (worst residual {residual:.3e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("augmented basis degenerated on level {level} ({detail})")]
    DegenerateBasis { level: usize, detail: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
