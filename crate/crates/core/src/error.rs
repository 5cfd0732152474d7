use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock dimension {0}: at least 2 basis states are required")]
    InvalidDimension(usize),

    #[error("shape mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    Shape { expected: usize, rows: usize, cols: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "truncation leakage {leakage:.3e} exceeds threshold {threshold:.1e} at dimension {dim}; \
         increase the Fock dimension (suggested at least {suggested})"
    )]
    Truncation { leakage: f64, threshold: f64, dim: usize, suggested: usize },

    #[error("integration accuracy lost: trace drift {drift:.3e} exceeds {tolerance:.1e} at t = {t}")]
    TraceDrift { drift: f64, tolerance: f64, t: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("quasi-stationary regime not reached; last relative change {last_change:.3e}")]
    NotStationary { last_change: f64 },

    #[error("unsupported frame: {0}")]
    UnsupportedFrame(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("insufficient sampling: {0}")]
    Sampling(String),

    #[error("measure undefined: {0}")]
    UndefinedMeasure(String),

    #[error("undriven limit-cycle radius is zero; deformation undefined")]
    DegenerateLimitCycle,

    #[error("no limit cycle: gamma2_vdp + 3 gamma2_ray must be positive")]
    NoLimitCycle,

    #[error("no spectral peak: max/median ratio {ratio:.3} below 1.5")]
    NoPeak { ratio: f64 },

    #[error("ill-conditioned linear solve: condition estimate {estimate:.3e}")]
    Conditioning { estimate: f64 },

    #[error("incomplete sweep: {} failed point(s): {failed:?}", failed.len())]
    PartialResult { failed: Vec<(usize, usize)> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Json(_)
            | Error::InvalidParameter(_)
            | Error::InvalidDimension(_)
            | Error::UnsupportedFrame(_)
            | Error::UnsupportedConfiguration(_) => 2,
            Error::Truncation { .. } => 3,
            Error::TraceDrift { .. }
            | Error::Integration { .. }
            | Error::Convergence(_)
            | Error::NotStationary { .. }
            | Error::Conditioning { .. } => 4,
            Error::Io(_) => 5,
            _ => 1,
        }
    }
}
