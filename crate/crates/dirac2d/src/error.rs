use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("kernel is singular at coincident points")]
    SingularPoint,
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("operators are defined on different grids")]
    GridMismatch,
    #[error("matrix is numerically singular: {0}")]
    Singular(String),
    #[error("ill-conditioned inversion at lambda = {lambda:e} (condition estimate {cond:e})")]
    IllConditioned { lambda: f64, cond: f64 },
    #[error("ambiguous threshold: singular values {values:?} fall in the band [{tol:e}, {gap:e}]")]
    AmbiguousKernel { values: Vec<f64>, tol: f64, gap: f64 },
    #[error("inconsistent threshold data: {0}")]
    Inconsistency(String),
    #[error("no coupling crossing found in [{lo}, {hi}]")]
    NotFound { lo: f64, hi: f64 },
    #[error("zero energy carries no eigenspace")]
    NoEigenspace,
    #[error("lambda = {0:e} is outside the range of the threshold expansion")]
    LambdaTooLarge(f64),
    #[error("numerical resolution insufficient: {0}")]
    Resolution(String),
    #[error("box too small for the requested times: {0}")]
    Causality(String),
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
