use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its invariant. `name` is the config key.
    #[error("{name}: {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("negative time step {0}")]
    NegativeStep(f64),

    #[error("operation requires {expected} mode")]
    ModeMismatch { expected: &'static str },

    #[error("bistable device conductance {0} is not at g_min or g_max")]
    NotBistableEndpoint(f64),

    #[error("read voltage {0} V would cross a switching threshold")]
    DestructiveRead(f64),

    #[error("drive waveform is empty")]
    EmptyDrive,

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("{what} must be sorted in nondecreasing order")]
    Unsorted { what: &'static str },

    #[error("coordinate ({row}, {col}) outside {rows}x{cols} mesh")]
    OutOfMesh {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("dangling reference to {kind} `{id}`")]
    DanglingReference { kind: &'static str, id: String },

    #[error("event at t={event_t} precedes local time {local_t} of {component}")]
    Causality {
        component: String,
        event_t: f64,
        local_t: f64,
    },

    /// Config parse or validation failure. `key` names the offending entry.
    #[error("{key}: {message}")]
    Config { key: String, message: String },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// The config key or parameter name this error refers to, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            Error::InvalidParam { name, .. } => Some(name),
            Error::Config { key, .. } => Some(key),
            Error::UnknownParameter(name) => Some(name),
            _ => None,
        }
    }
}
