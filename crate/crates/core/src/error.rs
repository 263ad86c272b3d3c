use thiserror::Error;

/// Errors produced by the histogram learner and its oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("insufficient samples: requested {requested}, only {available} available")]
    SampleExhausted { requested: usize, available: usize },

    #[error("expected a full probability distribution, total mass is {mass}")]
    NotADistribution { mass: f64 },

    #[error("candidate pool is empty")]
    EmptyPool,

    #[error("acceptance rate {rate:.2e} of the conditional sampler is below {floor:.0e}; target mass is almost entirely atomic")]
    LowAcceptance { rate: f64, floor: f64 },

    #[error("domain of size {size} exceeds the oracle cap {cap}")]
    DomainTooLarge { size: usize, cap: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected: "a value in (0, 1)",
        })
    }
}

pub(crate) fn check_positive_count(name: &'static str, value: usize) -> Result<()> {
    if value >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: value as f64,
            expected: "an integer >= 1",
        })
    }
}
