use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("field format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Iterative method stopped at its iteration cap.
    #[error("{operation} did not converge after {iterations} iterations (last estimate {last_estimate:e})")]
    Convergence {
        operation: &'static str,
        iterations: usize,
        last_estimate: f64,
    },

    #[error("spectral parameter z = {z_re}{z_im:+}i is within {distance:e} of the symbol value at xi = {xi:?}")]
    NearSingular {
        z_re: f64,
        z_im: f64,
        xi: Vec<f64>,
        distance: f64,
    },

    #[error("inadmissible exponents: {0}")]
    Admissibility(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("missing input: {0}")]
    Input(String),

    #[error("problem size {size} exceeds dense cap {cap}; use matrix-free diagnostics instead")]
    Size { size: usize, cap: usize },

    #[error("wavenumber off the grid lattice; nearest admissible z: {nearest:?}")]
    Quantization { nearest: Vec<f64> },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("eigensolver failure: {0}")]
    Solver(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    /// True for failures of a numerical method rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence { .. } | Error::Solver(_))
    }
}
