use thiserror::Error;

/// Errors produced by the expansion engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("variance must be strictly positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("unsupported Hermite order {0} (maximum is {max})", max = crate::hermite::MAX_HERMITE_ORDER)]
    UnsupportedOrder(usize),

    #[error("derivative of order {order} is not registered for test function {function}")]
    UnregisteredDerivative { function: String, order: usize },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("model `{model}` produced a non-finite {partial} at t={t}, w={w}")]
    ModelEvaluation {
        model: String,
        partial: &'static str,
        t: f64,
        w: f64,
    },

    #[error("non-finite value while evaluating path stream {stream}")]
    PathEvaluation { stream: u64 },

    #[error("grid with {steps} fine steps exceeds the limit of {limit}")]
    GridTooLarge { steps: u64, limit: u64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("{0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what))
    }
}
