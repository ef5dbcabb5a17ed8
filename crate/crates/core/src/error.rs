use thiserror::Error;

/// Errors raised by the solvers, tracers and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the interval on which a function is trusted.
    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A solver ran out of its configured budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A jump of a prescribed solution violates the Rankine–Hugoniot relation.
    #[error("jump {left} -> {right} at x = {position} has Rankine-Hugoniot speed {rh_speed}, expected {speed}")]
    RankineHugoniot {
        position: f64,
        left: f64,
        right: f64,
        rh_speed: f64,
        speed: f64,
    },

    /// A diagnostic does not apply to the given input.
    #[error("check not applicable: {0}")]
    NotApplicable(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
