use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while evaluating weights, operators or
/// determinant formulas.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `sh(λ + η)` (the weight denominator) vanished.
    #[error("singular vertex weight: |sh({arg} + eta)| = {magnitude:e}")]
    SingularWeight { arg: String, magnitude: f64 },

    #[error("series division by a series with constant term of magnitude {magnitude:e}")]
    DivisionBySingularSeries { magnitude: f64 },

    #[error("requested coefficient ({m}, {n}) exceeds series orders ({k1}, {k2})")]
    OrderExceeded { m: usize, n: usize, k1: usize, k2: usize },

    #[error("index {what} = {value} outside {lo}..={hi}")]
    IndexOutOfRange { what: &'static str, value: usize, lo: usize, hi: usize },

    #[error("ordering violation: {0}")]
    OrderingViolation(String),

    /// A denominator in a closed-form expression fell below its guard.
    #[error("singular parameters: {0}")]
    SingularParameters(String),

    /// Coincident parameters where distinct ones are required.
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// True for the numerical failure classes (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularWeight { .. }
                | Error::DivisionBySingularSeries { .. }
                | Error::SingularParameters(_)
                | Error::DegenerateParameters(_)
        )
    }
}
