use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter was outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {index} out of range for {n_modes}-mode state")]
    ModeOutOfRange { index: usize, n_modes: usize },

    /// Covariance violates the uncertainty principle (smallest symplectic
    /// eigenvalue reported).
    #[error("unphysical state: symplectic eigenvalue {nu} < 1")]
    Unphysical { nu: f64 },

    #[error("covariance matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    /// Fock truncation lost more probability mass than allowed.
    #[error("Fock cutoff too small: trace deficit {deficit:e} exceeds {bound:e}")]
    CutoffTooSmall { deficit: f64, bound: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("not implemented: {0}")]
    NotImplemented(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Rejects NaN/infinite values and anything below `min`.
pub(crate) fn check_at_least(name: &'static str, value: f64, min: f64) -> Result<()> {
    if !value.is_finite() || value < min {
        return Err(invalid(
            name,
            format!("must be finite and >= {min}, got {value}"),
        ));
    }
    Ok(())
}

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(invalid(name, format!("must lie in [0, 1], got {value}")));
    }
    Ok(())
}
