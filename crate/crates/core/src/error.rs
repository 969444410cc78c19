use thiserror::Error;

use crate::integrator::TimeSeries;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The trajectory left the overflow guard. The samples produced up to
    /// that point are kept so callers can inspect the blow-up.
    #[error("unbounded growth: |z| exceeded {guard:e} at t = {t}")]
    UnboundedGrowth {
        t: f64,
        guard: f64,
        partial: Box<TimeSeries>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("envelope is not periodic (autocorrelation {autocorrelation:.3} at the candidate lag)")]
    NotPeriodic { autocorrelation: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("pump above parametric threshold (delta*Q/2 = {pump_margin}); no linear steady state")]
    AboveThreshold { pump_margin: f64 },

    #[error("no stability threshold found in delta bracket [{lo}, {hi}]")]
    NoThresholdFound { lo: f64, hi: f64 },

    #[error("axial load {load:e} N is beyond buckling (critical load {critical:e} N)")]
    BeyondBuckling { load: f64, critical: f64 },

    #[error("bracket failure: {0}")]
    BracketFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
