use thiserror::Error;

/// Errors raised by the lattice laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller passed an argument outside the operation's contract.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A cube or radius does not fit the computational window.
    #[error("domain error: {0}")]
    Domain(String),

    /// The integrator produced a non-finite or runaway value.
    #[error("integration blow-up at t = {time}: |value| = {magnitude:e} at site {site:?}")]
    BlowUp {
        time: f64,
        site: Vec<i64>,
        magnitude: f64,
    },

    /// A closed-form bound whose applicability condition does not hold.
    #[error("bound not applicable: {0}")]
    Inapplicable(String),

    /// A bound that is infinite for the given parameters.
    #[error("unbounded: {0}")]
    Unbounded(String),

    /// A stable-manifold classification that ran out of its step budget.
    #[error("inconclusive classification after {steps} steps; bracket [{lo}, {hi}]")]
    Inconclusive { lo: f64, hi: f64, steps: usize },

    /// The sublevel-set grid search never closed off the set.
    #[error("grid exhausted: {0}")]
    GridExhausted(String),

    /// The ordering cone or partial order was violated during a run.
    #[error("order violated at site {site:?}, t = {time}: excess {excess:e}")]
    OrderViolation {
        site: Vec<i64>,
        time: f64,
        excess: f64,
    },

    /// Malformed snapshot or configuration text.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
