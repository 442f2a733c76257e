use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A window or evaluation point leaves the range covered by a table.
    #[error("window [{start}, {end}] leaves table range [{lo}, {hi}]")]
    Range { start: f64, end: f64, lo: f64, hi: f64 },

    #[error("window length {theta} is shorter than the grid step {step}")]
    DegenerateWindow { theta: f64, step: f64 },

    /// Grid parameters violate an invariant; `field` names the offending parameter.
    #[error("invalid grid: {field}: {reason}")]
    InvalidGrid { field: &'static str, reason: String },

    #[error("unknown signal `{0}`")]
    UnknownSignal(String),

    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("invalid parameter `{param}` for `{name}`: {reason}")]
    InvalidParam {
        name: String,
        param: String,
        reason: String,
    },

    #[error("signal `{label}` exceeds its bound {bound} at {at}: value {value}")]
    BoundViolation {
        label: String,
        at: f64,
        value: f64,
        bound: f64,
    },

    /// Kernel truncation length exceeds the room available before the tail window.
    #[error("kernel support reaches {truncation} but only {room} is available before the tail start")]
    KernelWindow { truncation: f64, room: f64 },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("convolution power drifted in mass: expected {expected}, got {actual}")]
    MassDrift { expected: f64, actual: f64 },

    /// An iterated sweep increased beyond the allowed slack.
    #[error("sweep is not monotone at k = {k}: {previous} -> {next}")]
    NonMonotone { k: u32, previous: f64, next: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn param(name: &str, param: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.to_string(),
            param: param.to_string(),
            reason: reason.into(),
        }
    }
}
