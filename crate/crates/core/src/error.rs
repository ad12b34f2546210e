use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid base {0}: must satisfy 2 <= b <= 65536")]
    InvalidBase(u64),

    #[error("digit {digit} is not valid in base {base}")]
    DigitOutOfRange { digit: u64, base: u32 },

    #[error("expected {expected} probabilities, got {got}")]
    WrongArity { expected: usize, got: usize },

    #[error("probability of digit {digit} is negative: {value}")]
    NegativeMass { digit: usize, value: String },

    #[error("probabilities sum to {0}, not 1")]
    NonUnitMass(String),

    #[error("base mismatch: {left} vs {right}")]
    BaseMismatch { left: u32, right: u32 },

    #[error("value {0} is outside [0,1]")]
    OutOfRange(String),

    #[error("empty interval: left endpoint {a} is not below right endpoint {b}")]
    EmptyInterval { a: String, b: String },

    #[error("{0} is not a finite expansion in base {1}")]
    NotFiniteExpansion(String, u32),

    #[error("{0} is a perfect square; its square root has no fractional digits")]
    PerfectSquare(String),

    #[error("square-root source requires m >= 2, got {0}")]
    NotANumber(String),

    #[error("digit 0 collapses the block construction to the all-zeros stream")]
    DegenerateDigit,

    #[error("stream exhausted after {available} digits, {needed} needed")]
    StreamExhausted { needed: u64, available: u64 },

    #[error("word table for base {base} and max length {max_len} exceeds the bound of {bound} entries")]
    ExplosiveK { base: u32, max_len: usize, bound: u64 },

    #[error("invalid digit {token:?} at position {position}")]
    InvalidDigit { position: u64, token: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
