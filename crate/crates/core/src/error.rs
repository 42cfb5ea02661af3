use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("step too large: dt*omega = {ratio:.4} rad exceeds {limit} rad per step")]
    StepTooLarge { ratio: f64, limit: f64 },

    #[error("state became non-finite at t = {t} s")]
    NonFiniteState { t: f64 },

    #[error("singular effectiveness matrix (det = {det:e})")]
    SingularMatrix { det: f64 },

    #[error("{what} = {value} outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("unstable filter configuration: cutoff*dt = {product} (must be < 1)")]
    UnstableFilter { product: f64 },

    #[error("need at least {need} frames, got {got}")]
    TooFewFrames { got: usize, need: usize },

    #[error("regressor matrix is rank deficient ({0})")]
    RankDeficient(String),

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    #[error("no valid samples")]
    NoValidSamples,

    #[error("radial station {x} cm is outside the blade span [{min}, {max}] cm")]
    OutOfSpan { x: f64, min: f64, max: f64 },

    #[error("induced-velocity iteration diverged in annulus {annulus}")]
    IterationDivergence { annulus: usize },

    #[error("lift coefficient {cl} beyond stall clamp {clamp}")]
    BeyondStallClamp { cl: f64, clamp: f64 },

    #[error("airspeed {v} m/s below stall speed {v_stall:.3} m/s")]
    BelowStallSpeed { v: f64, v_stall: f64 },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("log schema mismatch at line {line}: {msg}")]
    SchemaMismatch { line: usize, msg: String },

    #[error("non-monotone time at line {line}: t = {t} does not exceed previous {prev}")]
    NonMonotoneTime { line: usize, t: f64, prev: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config {
            line: 0,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the CLI: 2 for configuration problems,
    /// 3 for bad or missing inputs, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidParams(_) | Error::OutOfRange { .. } => 2,
            Error::SchemaMismatch { .. }
            | Error::NonMonotoneTime { .. }
            | Error::Io { .. }
            | Error::TooFewFrames { .. }
            | Error::NoValidSamples
            | Error::DegenerateSamples(_) => 3,
            _ => 4,
        }
    }
}
