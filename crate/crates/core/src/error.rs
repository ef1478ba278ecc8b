use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// An argument lies outside the domain where the formula is defined.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// The caller broke a documented precondition (mismatched heights, bad sequences, ...).
    #[error("contract violation in {op}: {detail}")]
    Contract { op: &'static str, detail: String },

    /// A Beltrami coefficient reached the unit circle where only |mu| < 1 is allowed.
    #[error("degenerate coefficient: sup |mu| = {sup_modulus} >= 1")]
    Degenerate { sup_modulus: f64 },

    /// The linear system of the grid solver is not positive definite.
    #[error("singular normal equations at pivot {pivot} (value {value:e})")]
    Singular { pivot: usize, value: f64 },

    /// A quadrature did not reach its requested tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, change under refinement {change:e}")]
    Quadrature { estimate: f64, change: f64 },

    /// A David certificate could not be issued.
    #[error("certification failed: {0}")]
    Certification(String),

    /// A derivative vanished where the Schwarzian needs to divide by it.
    #[error("derivative vanishes at z = {re} + {im}i")]
    Pole { re: f64, im: f64 },
}

impl LabError {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        LabError::Domain { op, detail: detail.into() }
    }

    pub(crate) fn contract(op: &'static str, detail: impl Into<String>) -> Self {
        LabError::Contract { op, detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
