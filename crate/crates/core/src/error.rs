use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential is not a double well at u_ax = {u_ax} V")]
    NotDoubleWell { u_ax: f64 },

    #[error("ions {i} and {j} coincide at z = {z} m")]
    SingularConfiguration { i: usize, j: usize, z: f64 },

    #[error("equilibrium did not converge after {iterations} iterations (|grad| = {grad_norm:e} N)")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("ion escaped its well: {0}")]
    BasinEscape(String),

    #[error("unstable equilibrium: Hessian eigenvalue {eigenvalue:e} J/m^2 is not positive")]
    Unstable { eigenvalue: f64 },

    #[error("Fock cutoff {cutoff} too small: {reason}")]
    CutoffTooSmall { cutoff: usize, reason: String },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI error report and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NotDoubleWell { .. } => "not_double_well",
            Error::SingularConfiguration { .. } => "singular_configuration",
            Error::NotConverged { .. } => "not_converged",
            Error::BasinEscape(_) => "basin_escape",
            Error::Unstable { .. } => "unstable",
            Error::CutoffTooSmall { .. } => "cutoff_too_small",
            Error::Fit(_) => "fit_failed",
            Error::Parse(_) => "parse_error",
            Error::Io(_) => "io_error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
