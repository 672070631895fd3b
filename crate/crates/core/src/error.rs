use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid LCF code: {0}")]
    InvalidCode(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// A requested monomial degree is not covered by the graph's girth.
    #[error("degree {degree} exceeds the girth gate of this graph (girth {girth}, need girth >= {required_girth})")]
    GateViolation {
        degree: usize,
        girth: usize,
        required_girth: usize,
    },

    #[error("quadrature did not converge: estimated error {error:e} above tolerance {tolerance:e}")]
    QuadratureNotConverged { error: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(format!($($arg)*))
    };
}

macro_rules! out_of_domain {
    ($($arg:tt)*) => {
        $crate::error::Error::OutOfDomain(format!($($arg)*))
    };
}

pub(crate) use invalid;
pub(crate) use out_of_domain;
