use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Validation failures are usually reported as data (see
/// [`crate::model::Violation`]); this type covers the cases where an
/// operation cannot proceed at all.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("duplicate resource id `{0}`")]
    DuplicateId(String),

    #[error("missing trace `{0}`")]
    MissingTrace(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("solver fault in scenario {scenario}: {message}")]
    DispatchFault { scenario: usize, message: String },

    #[error(
        "bracket violation: metric({lo:.6}) - target = {f_lo:.6e}, metric({hi:.6}) - target = {f_hi:.6e}"
    )]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("non-monotone reliability curve: metric({a:.6}) = {ra:.9} > metric({b:.6}) = {rb:.9}")]
    NonMonotone { a: f64, ra: f64, b: f64, rb: f64 },

    #[error("scenario set mismatch: expected fingerprint {expected}, found {found}")]
    ScenarioMismatch { expected: String, found: String },

    #[error("enumeration budget exceeded ({0} states)")]
    Budget(u64),

    #[error("no witness found: {0}")]
    NoWitness(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("cache error: {0}")]
    Cache(String),
}

impl Error {
    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_)
            | Error::Validation(_)
            | Error::DuplicateId(_)
            | Error::MissingTrace(_)
            | Error::Dimension(_)
            | Error::ScenarioMismatch { .. }
            | Error::Json(_) => 1,
            Error::DispatchFault { .. }
            | Error::Bracket { .. }
            | Error::NonMonotone { .. }
            | Error::Budget(_)
            | Error::NoWitness(_) => 2,
            Error::Io(_) | Error::Csv(_) | Error::Cache(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
