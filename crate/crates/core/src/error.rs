use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential is not integrable enough: {0}")]
    NotIntegrable(String),

    #[error("spectral parameter sits on a threshold (kappa = 0); use the split kernel")]
    Threshold,

    #[error("truncation radius {radius} too small: tail estimate {tail:e} exceeds tolerance {tol:e}")]
    Truncation { radius: f64, tail: f64, tol: f64 },

    #[error("1 - eps*M is singular at kappa = {kappa} (Birman-Schwinger eigenvalue collision)")]
    Singular { kappa: Complex64 },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("argument tracking failed near {at}: contour passes too close to a zero")]
    Contour { at: Complex64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("potential is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("gap condition violated: {0}")]
    GapCondition(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the caller's input rather than by a solver.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Config(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::NotIntegrable(_)
                | Error::NonHermitian(_)
        )
    }
}
