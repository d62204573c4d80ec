use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Moment pair violating `0 < f^p <= F`.
    #[error("infeasible: f^p > F (f = {f}, F = {big_f}, p = {p})")]
    Infeasible { p: f64, f: f64, big_f: f64 },

    /// No affine map `a*g + b` with `a > 0` and nonnegative output reaches the target moments.
    #[error("infeasible projection: {0}")]
    InfeasibleProjection(String),

    #[error("invalid step function: {0}")]
    InvalidStep(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status: 2 for domain and configuration errors, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
