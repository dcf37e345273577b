use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("not a covering: {0}")]
    NotACovering(String),
    #[error("cell ({0}, {1}) is not in any triangle")]
    NotInTriangle(i64, i64),
    #[error("missing parent map")]
    MissingParentMap,
    #[error("truncation unsafe: {0}")]
    TruncationUnsafe(String),
    #[error("no real preimage for y = {0}")]
    NoRealPreimage(f64),
    #[error("point {0} is not in the Julia set")]
    NotInJulia(f64),
    #[error("code too short: achievable bound {0:e}")]
    NeedsLongerCode(f64),
    #[error("argument {0} is within the pole guard of {1}")]
    Pole(f64, f64),
    #[error("no convergence before depth {depth}: last values {prev} and {last}")]
    Budget { depth: u32, prev: f64, last: f64 },
    #[error("identity failed: {0}")]
    IdentityFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
