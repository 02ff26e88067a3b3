use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("division by zero")]
    DivisionByZero,

    #[error("non-finite value while evaluating {what} at x={x}, a={a}")]
    NonFinite { what: String, x: f64, a: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid thermostat configuration: {0}")]
    InvalidConfig(String),

    #[error("incoherent relay state: mode {mode} at x={x}")]
    IncoherentState { mode: i32, x: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("search budget exceeded: {requested} combinations requested, cap is {cap}")]
    BudgetExceeded { requested: u128, cap: u128 },

    #[error("weights undefined: {0}")]
    DegenerateWeights(&'static str),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidScenario(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
