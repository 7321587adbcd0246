use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point is not on the unit sphere (|y| - 1 = {0:e})")]
    NotOnSphere(f64),
    #[error("mesh is not a {expected} mesh")]
    WrongMeshKind { expected: &'static str },
    #[error("mode index {0} is not available")]
    ModeOutOfRange(usize),
    #[error("matrix is singular or not positive definite (pivot {pivot} = {value:e})")]
    Singular { pivot: usize, value: f64 },
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("indicial discriminant is negative ({0:e}): oscillatory regime")]
    Oscillatory(f64),
    #[error("argument {0:e} outside the supported Bessel range")]
    BesselRange(f64),
    #[error("field leaves the warped slab (|u| = {0:e})")]
    SlabViolation(f64),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("boundary integral vanishes: field is trivial")]
    TrivialField,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
