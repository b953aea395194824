use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} lies outside {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("step size underflow at x = {x} (z = {z})")]
    Integration { x: f64, z: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no bracket for eigenvalue {n} below z = {z_cap}")]
    BracketNotFound { n: usize, z_cap: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
