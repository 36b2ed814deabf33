use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate purification step: success probability is zero")]
    DegenerateStep,

    #[error("{what} = {value} is outside the feasible interval [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("protocol cutoff undefined: every denominator is non-positive")]
    CutoffUndefined,

    #[error("Markov chain would need {states} states, above the cap of {cap}")]
    StateCapExceeded { states: u64, cap: u64 },

    #[error("purification impossible: initial Bell fidelity {0} is not above 1/2")]
    PurificationImpossible(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
