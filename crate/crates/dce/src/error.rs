use thiserror::Error;

/// Error type shared by every module; the CLI maps variants onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("spectrum solver failed for mode {mode}: {reason}")]
    Spectrum { mode: usize, reason: String },

    #[error("integration failure at t={t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit codes: 0 ok, 2 config, 3 spectrum, 4 integration, 5 fit.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Spectrum { .. } => 3,
            Error::Integration { .. } => 4,
            Error::Fit(_) => 5,
            Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
