use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two sign vectors (or a vector and an arrangement) disagree on `m`.
    Dimension { expected: usize, found: usize },
    /// Malformed input: weights, partitions, chambers, file contents.
    Validation(String),
    /// A size limit was hit; `limit` is the configured cap.
    Capacity {
        what: &'static str,
        requested: u128,
        limit: u128,
    },
    /// The weights leave these hyperplanes uncut.
    NotSeparating { violated: Vec<usize> },
    /// A numeric parameter is outside its admissible range.
    Parameter(String),
    /// Stopping-time sampling ran past the hard cap.
    StepCap { cap: u64 },
    /// Linear solve failed.
    Singular(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension { expected, found } => {
                write!(f, "dimension mismatch: expected {expected} coordinates, found {found}")
            }
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Capacity {
                what,
                requested,
                limit,
            } => write!(f, "capacity exceeded for {what}: requested {requested}, limit {limit}"),
            Error::NotSeparating { violated } => {
                write!(f, "weights are not separating; uncut hyperplanes {violated:?}")
            }
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
            Error::StepCap { cap } => write!(
                f,
                "stopping time exceeded the hard cap of {cap} steps (check that the weights separate)"
            ),
            Error::Singular(msg) => write!(f, "singular system: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
