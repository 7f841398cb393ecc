use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("all counts are zero")]
    AllZeroCounts,

    #[error("invalid joint table: {0}")]
    InvalidTable(String),

    #[error("conditioning event {0} has zero probability")]
    ZeroConditioningMargin(String),

    #[error("singular kernel: determinant {det:e} is too close to zero")]
    SingularKernel { det: f64 },

    #[error("kernel is not realizable for this table: {0}")]
    InvalidCause(String),

    #[error("invalid cause model: {0}")]
    InvalidModel(String),

    #[error("table does not exhibit Simpson's paradox")]
    NotAParadox,

    #[error("rejection sampler exceeded {draws} draws")]
    BudgetExceeded { draws: u64 },

    #[error("invalid Dirichlet parameters: {0}")]
    InvalidDirichlet(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix {0} is not symmetric positive definite")]
    NotPositiveDefinite(String),

    #[error("block B + L is ill-conditioned (condition number {0:e})")]
    IllConditionedBlock(f64),

    #[error("variance of b is degenerate")]
    DegenerateB,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("probabilities sum to {0}, expected 1")]
    Normalization(f64),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("published values are inconsistent: {0}")]
    InconsistentData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
