use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge within {terms} terms (partial sum {partial}, tail bound {tail})")]
    NonConvergent { terms: usize, partial: f64, tail: f64 },

    #[error("degenerate normaliser ({0})")]
    DegenerateNormaliser(String),

    #[error("overflow: I_nu(z) exceeds the representable range (log value {log_value})")]
    Overflow { log_value: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid value for `{key}`: {msg}")]
    Validation { key: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
