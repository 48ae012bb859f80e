use thiserror::Error;

/// Errors raised by the model, cycle and sweep layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model or cycle parameter violates its domain constraint.
    #[error("{param} must satisfy {constraint} (got {value})")]
    Domain {
        param: &'static str,
        constraint: &'static str,
        value: f64,
    },

    /// The hot bath must be strictly hotter than the cold bath.
    #[error("bath temperatures must satisfy T1 > T2 (got T1 = {t1}, T2 = {t2})")]
    TemperatureOrder { t1: f64, t2: f64 },

    /// Local temperature is undefined at zero field or for an unpolarized spin.
    #[error("local temperature undefined: {0}")]
    UndefinedLocalTemperature(&'static str),

    /// Probabilities handed in from outside do not form a distribution.
    #[error("invalid level probabilities: {0}")]
    InvalidProbabilities(String),

    /// Sweep range or step count is malformed.
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    /// A sweep grid point produced invalid cycle parameters.
    #[error("grid point {variable} = {value} is invalid: {source}")]
    InvalidGridPoint {
        variable: &'static str,
        value: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_finite(param: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            param,
            constraint: "a finite value",
            value,
        })
    }
}
