use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input {0}")]
    Domain(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate resultant vector (norm {norm:e})")]
    DegenerateResultant { norm: f64 },

    #[error("separation {theta} lies on a step boundary of the Heaviside form; evaluate the piecewise law instead")]
    BoundaryAmbiguity { theta: f64 },

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tol:e}")]
    Numeric { estimate: f64, tol: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}
