use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Hurst parameter must lie in (0, 1), got {0}")]
    InvalidHurst(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("covariance matrix not positive definite at level m={level}, H={hurst}")]
    NotPositiveDefinite { level: u32, hurst: f64 },

    #[error("{points} grid points exceed the Cholesky size guard ({limit}); use the circulant sampler")]
    CholeskyTooLarge { points: usize, limit: usize },

    #[error("circulant embedding has a negative eigenvalue ({eigenvalue:e}) even at embedding size {size}")]
    NegativeEigenvalue { eigenvalue: f64, size: usize },

    #[error("cannot restrict a level-{fine} path to level {coarse}")]
    RestrictionLevel { fine: u32, coarse: u32 },

    #[error("{function}: derivative of order {requested} requested but only {available} available")]
    JetOrder {
        function: String,
        requested: usize,
        available: usize,
    },

    #[error("Crank-Nicolson fixed point did not converge (y={y}, dB={db}, dt={dt}, residual={residual:e})")]
    ImplicitSolve {
        y: f64,
        db: f64,
        dt: f64,
        residual: f64,
    },

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("Jacobian factor became non-positive ({value}) at grid index {index}")]
    NonPositiveJacobian { index: usize, value: f64 },

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("time {0} is not a point of the grid")]
    OffGrid(f64),

    #[error("insufficient refinement: fine level {fine} must be at least {required}")]
    Refinement { fine: u32, required: u32 },

    #[error("series for {name} did not reach tolerance {tol:e} within {terms} terms")]
    SeriesTolerance {
        name: String,
        tol: f64,
        terms: usize,
    },

    #[error("series for {name} requires 0 < H < 1/2, got {hurst}")]
    SeriesDomain { name: String, hurst: f64 },

    #[error("solution path carries no Jacobian")]
    MissingJacobian,

    #[error("no limit prediction: {0}")]
    NoPrediction(String),

    #[error("unknown function fixture {0:?}")]
    UnknownFixture(String),

    #[error("length mismatch: {0}")]
    Length(String),

    #[error("malformed path data: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
