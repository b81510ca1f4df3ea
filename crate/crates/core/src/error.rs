use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid deformation: {0}")]
    InvalidDeformation(String),

    #[error("meshing failed: {0}")]
    Meshing(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("incompatible Neumann data: boundary mean {mean:e} exceeds tolerance")]
    Compatibility { mean: f64 },

    #[error("field has nonzero Dirichlet trace (max {max_trace:e})")]
    NonzeroTrace { max_trace: f64 },

    #[error("base configuration is not critical: flux deviation {deviation:e} > tolerance {tolerance:e}")]
    BaseNotCritical { deviation: f64, tolerance: f64 },

    #[error("operator assembly failed: relative asymmetry {asymmetry:e}")]
    Asymmetric { asymmetry: f64 },

    #[error("eigen-solver failed: {0}")]
    Eigen(String),

    #[error("degenerate sweep: {0}")]
    SweepDegenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("reduction invalid: core energy {energy:e} above locking threshold {threshold:e}")]
    ReductionInvalid { energy: f64, threshold: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
