//! Crate-wide error type.

use crate::histories::HistoryTrace;

/// Errors produced by graph construction, rule building, history development
/// and the experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid parameter for a generator or estimator.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Edge-list or config text failed to parse.
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Mismatched dimensions (spin vector vs graph, subset vs spins, ...).
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Experiment configuration is incomplete or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// The requested inverse temperature is too large for the Fourier rule.
    #[error("beta too large for Fourier rule at degree {r}: {msg}")]
    BetaTooLarge { r: usize, msg: String },

    /// Parameters violate a feasibility condition.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    /// A rule without the monotonicity property was passed to a coupling.
    #[error("unsupported rule: {0}")]
    UnsupportedRule(String),

    /// Operation called on clusters or traces of the wrong history mode.
    #[error("history mode mismatch: {0}")]
    Mode(String),

    /// State space too large for exact computation.
    #[error("system too large: {0}")]
    Size(String),

    /// Annealed history development exceeded its depth cap.
    #[error("history overflow: extinction not reached above time {floor}")]
    HistoryOverflow {
        floor: f64,
        partial: Box<HistoryTrace>,
    },

    /// Coupling from the past failed to coalesce within the depth cap.
    #[error("no coalescence within 2^{max_epoch} time units")]
    NoCoalescence { max_epoch: u32 },

    /// The profile grid does not bracket the quantity being located.
    #[error("grid too short: {0}")]
    GridTooShort(String),

    /// A metric is undefined on the given inputs.
    #[error("undefined metric: {0}")]
    Metric(String),

    /// Too few samples for the requested statistic.
    #[error("sample size too small: {0}")]
    SampleSize(String),

    /// Cluster rendering layout incompatible with the dump.
    #[error("layout error: {0}")]
    Layout(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI: 2 config/parse, 3 infeasible or
    /// invalid parameters, 4 overflow / no coalescence, 1 everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } => 2,
            Error::Parameter(_)
            | Error::BetaTooLarge { .. }
            | Error::Infeasible(_)
            | Error::UnsupportedRule(_)
            | Error::Size(_)
            | Error::Shape(_)
            | Error::Mode(_)
            | Error::Metric(_)
            | Error::SampleSize(_)
            | Error::GridTooShort(_)
            | Error::Layout(_) => 3,
            Error::HistoryOverflow { .. } | Error::NoCoalescence { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}
