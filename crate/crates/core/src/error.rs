use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("configuration error in `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("port count mismatch: {0} vs {1}")]
    PortMismatch(usize, usize),
    #[error("triplets live on different Hilbert spaces")]
    SpaceMismatch,
    #[error("step size {dt} exceeds stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("numerical failure at t={t}: {msg}")]
    Numerical { t: f64, msg: String },
    #[error("Fock truncation leakage {leak:.3e} exceeds {limit:.1e} at t={t}")]
    Truncation { t: f64, leak: f64, limit: f64 },
    #[error("state invariant violated: {0}")]
    Invariant(String),
    #[error("entanglement impossible: {0}")]
    EntanglementImpossible(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: &str, msg: impl Into<String>) -> Self {
        Error::Config { field: field.to_string(), msg: msg.into() }
    }

    pub fn numerical(t: f64, msg: impl Into<String>) -> Self {
        Error::Numerical { t, msg: msg.into() }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_) | Error::Config { .. } | Error::Json(_) => 2,
            Error::StepTooLarge { .. }
            | Error::Numerical { .. }
            | Error::Truncation { .. }
            | Error::Invariant(_) => 3,
            _ => 1,
        }
    }
}
