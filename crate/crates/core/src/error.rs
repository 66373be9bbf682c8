use thiserror::Error;

use crate::geometry::Vec2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integer overflow computing convergent s = {s}")]
    IntegerOverflow { s: usize },

    #[error("invalid magic pair (n = {n}, m = {m}): need 0 < m < n and gcd(m, n) = 1")]
    InvalidPair { n: u64, m: u64 },

    #[error("epsilon must be non-zero")]
    ZeroEpsilon,

    #[error("grid spacing {spacing} exceeds the floor T/16 = {floor}")]
    ResolutionTooCoarse { spacing: f64, floor: f64 },

    #[error("rotation angle {alpha} rad is not a magic angle; periodic sampling impossible")]
    NotPeriodic { alpha: f64 },

    #[error("operation requires {expected} boundary mode")]
    WrongBoundary { expected: &'static str },

    #[error("every component at epsilon = {epsilon} touches the window boundary")]
    WindowTooSmall { epsilon: f64 },

    #[error("grid cannot separate the percolation cases at epsilon = {epsilon}")]
    Ambiguous { epsilon: f64 },

    #[error(
        "positive and negative thresholds disagree: +[{pos_lo}, {pos_hi}] vs -[{neg_lo}, {neg_hi}]"
    )]
    ThresholdMismatch {
        pos_lo: f64,
        pos_hi: f64,
        neg_lo: f64,
        neg_hi: f64,
    },

    #[error("shift ({}, {}) is {dist} away from the symmetric-shift lattice", .shift.x, .shift.y)]
    NotSymmetricShift { shift: Vec2, dist: f64 },

    #[error("Newton refinement from seed ({}, {}) did not converge in {iterations} iterations", .seed.x, .seed.y)]
    NewtonStall { seed: Vec2, iterations: usize },

    #[error("non-generic configuration: {0}")]
    NonGeneric(String),

    #[error("working set of {required} bytes exceeds the cap of {cap} bytes")]
    MemoryCapExceeded { required: u64, cap: u64 },

    #[error("fit needs at least {needed} usable records, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
