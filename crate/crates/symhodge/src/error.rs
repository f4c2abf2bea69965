use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymError {
    #[error("degree {degree} out of range for this operation (n = {n})")]
    Degree { n: usize, degree: usize },
    #[error("half-dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("ill-conditioned weight-space solve (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("expression is not periodic on axis {axis}: seam mismatch {mismatch:.3e}")]
    SeamMismatch { axis: usize, mismatch: f64 },
    #[error("field requires a primitive input")]
    NotPrimitive,
    #[error("rank cutoff is ambiguous: straddling ratio {ratio:.3} < 10")]
    RankAmbiguous { ratio: f64 },
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, SymError>;

impl From<std::io::Error> for SymError {
    fn from(e: std::io::Error) -> Self {
        SymError::Io(e.to_string())
    }
}
