use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {}", format_violations(.0))]
    InvalidModel(Vec<Violation>),

    /// An argument is outside the domain of the operation (negative rate,
    /// misordered barriers, non-finite point, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The model does not satisfy the drift-sign condition an asymptotic
    /// result needs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A quantity that is positive in exact arithmetic came out zero or
    /// negative.
    #[error("numeric instability: {0}")]
    NumericInstability(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("simulation diverged: {0}")]
    Diverged(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub(crate) fn check_rate(q: f64) -> Result<()> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rate q must be finite and strictly positive, got {q}"
        )));
    }
    Ok(())
}

pub(crate) fn check_finite(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("{name} must be finite, got {x}")));
    }
    Ok(())
}
