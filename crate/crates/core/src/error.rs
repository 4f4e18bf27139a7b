//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits}-qubit state")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("gate {kind} on qubit {target}: control equals target")]
    ControlIsTarget { kind: &'static str, target: usize },

    #[error("gate {kind} {detail}")]
    AngleMismatch { kind: &'static str, detail: &'static str },

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tape does not belong to this layer state (stale or mismatched)")]
    StaleTape,

    #[error("degenerate field: max equals min, cannot normalize")]
    DegenerateField,

    #[error("solver blow-up: non-finite value at step {step}")]
    BlowUp { step: usize },

    #[error("energy grew by {increase:e} at step {step}")]
    EnergyGrowth { step: usize, increase: f64 },

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable tag used by the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::QubitOutOfRange { .. } | Error::ControlIsTarget { .. } => "gate",
            Error::AngleMismatch { .. } => "angle",
            Error::LengthMismatch { .. } => "dimension",
            Error::InvalidArgument(_) => "argument",
            Error::StaleTape => "tape",
            Error::DegenerateField => "degenerate_field",
            Error::BlowUp { .. } => "blow_up",
            Error::EnergyGrowth { .. } => "energy_growth",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Config { .. } => "config",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            got,
        })
    }
}
