//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or config value failed validation.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Boundary condition not supported by the requested builder.
    #[error("unsupported boundary condition: {0}")]
    UnsupportedBoundary(String),

    /// The exponent pair is outside the regime the certificates cover.
    #[error(
        "exponent regime error: the bound/decay certificates require 0 < alpha < beta, \
         got alpha = {alpha}, beta = {beta} (universal boundedness is known to fail \
         for alpha >= beta)"
    )]
    Regime { alpha: f64, beta: f64 },

    /// Step size control drove dt below the configured floor.
    #[error(
        "step size underflow at t = {t:.6e} (dt = {dt:.3e} < dt_min = {dt_min:.3e}); \
         state norm |u| = {norm_u:.3e}, |v| = {norm_v:.3e}"
    )]
    Stiffness {
        t: f64,
        dt: f64,
        dt_min: f64,
        norm_u: f64,
        norm_v: f64,
    },

    /// The state stopped being finite.
    #[error("solution diverged: non-finite state at t = {t:.6e}")]
    Diverged { t: f64 },

    /// Safety valve against runaway integrations.
    #[error("step limit {limit} exceeded at t = {t:.6e}")]
    StepLimit { t: f64, limit: u64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Declared assumption constants contradict an evaluated energy.
    #[error("declared constants inconsistent: {0}")]
    ConstantsInconsistent(String),

    /// An operation needs a declared constant the system does not carry.
    #[error("missing declared constant {0} (required by this certificate)")]
    MissingConstant(&'static str),

    #[error("window [{lo}, {hi}] selects {found} samples, need at least {need}")]
    EmptyWindow {
        lo: f64,
        hi: f64,
        found: usize,
        need: usize,
    },

    /// A fit was refused (e.g. vanishing energy inside the window).
    #[error("fit refused: {0}")]
    FitRefused(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
