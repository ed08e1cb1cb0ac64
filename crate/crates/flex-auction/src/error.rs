//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by model construction, auction evaluation and the
/// verification tooling.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid argument relative to a validated model or structure
    /// (bad level index, valuation outside the support, length mismatch).
    Domain(String),
    /// A model violates a construction invariant (masses, knots, density).
    Model(String),
    /// A requested virtual value lies above the attainable range.
    Range { target: f64, max: f64 },
    /// An exhaustive-enumeration guard was exceeded.
    Capacity(String),
    /// A caller broke an operation's contract (e.g. inadequate survivors).
    Contract(String),
    /// Malformed configuration or profile input.
    Parse(String),
    /// Underlying I/O failure, with the offending path.
    Io(String),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Model(msg) => write!(f, "model error: {msg}"),
            Error::Range { target, max } => {
                write!(f, "range error: virtual value {target} above attainable maximum {max}")
            }
            Error::Capacity(msg) => write!(f, "capacity error: {msg}"),
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
