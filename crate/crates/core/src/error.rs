use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("Fibonacci number F_{k} does not fit in 64 bits")]
    FibonacciOverflow { k: usize },

    #[error("resource limit exceeded: {what} needs {requested}, limit is {limit}")]
    ResourceLimit {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("index {index} lies outside the sequence window of length {len}")]
    IndexOutOfWindow { index: i64, len: usize },

    #[error("matrix entries overflowed at generation {k}")]
    EntryOverflow { k: usize },

    #[error("could not certify a band edge of Sigma_{k} inside [{lo:.17e}, {hi:.17e}]")]
    UnresolvedEdge { k: usize, lo: f64, hi: f64 },

    #[error("band set is empty")]
    EmptyBandSet,

    #[error("energy window [{lo}, {hi}] does not meet the band set")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("invalid box-size range: {0}")]
    InvalidScaleRange(String),

    #[error("degenerate regression: only {usable} usable scales")]
    DegenerateRegression { usable: usize },

    #[error("window of {size} sites does not fit in a sieved word of {available} sites")]
    WindowTooLarge { size: usize, available: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
