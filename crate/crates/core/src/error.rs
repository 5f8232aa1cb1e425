use thiserror::Error;

use crate::field::Wavenumber;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode {0} violates the mean-zero constraint")]
    MeanMode(Wavenumber),

    #[error("mode {k} lies outside the stored square |kx|,|ky| <= {max_mode}")]
    ModeOutOfRange { k: Wavenumber, max_mode: usize },

    #[error("grid of size {grid_size} cannot resolve max_mode {max_mode} (need >= {})", 2 * max_mode + 2)]
    GridTooSmall { grid_size: usize, max_mode: usize },

    #[error("grid size {0} must be even")]
    OddGrid(usize),

    #[error("fields have different max_mode ({0} vs {1})")]
    ShapeMismatch(usize, usize),

    #[error("matrix {0:?} has determinant {1}, expected +1 or -1")]
    NotUnimodular([[i64; 2]; 2], i64),

    #[error("matrix {0:?} has an eigenvalue on the unit circle")]
    NotHyperbolic([[i64; 2]; 2]),

    #[error("eigenvector pair is degenerate (collinear)")]
    DegenerateEigenbasis,

    #[error("transfer at step {step} pushed mass {lost_mass:e} outside the stored modes")]
    TruncationOverflow { step: usize, lost_mass: f64 },

    #[error("integer overflow iterating wavenumbers; last safe step is {max_safe_n}")]
    IntegerOverflow { max_safe_n: usize },

    #[error("spectral distribution of the zero field is undefined")]
    ZeroField,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("stationary series tail not certified after {n_cap} pulses (tail bound {tail_bound:e}); increase kappa or tol")]
    TailNotCertified { n_cap: usize, tail_bound: f64 },

    #[error("no usable points in fitting window: {0}")]
    EmptyWindow(String),

    #[error("zeta = {zeta} <= 0 at delta = {delta}; choose delta below {delta_bar}")]
    ZetaNonPositive { zeta: f64, delta: f64, delta_bar: f64 },

    #[error("{failed} of {total} validation checks failed")]
    ChecksFailed { failed: usize, total: usize },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Process exit status: 2 for bad input, 3 for numerical or I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MeanMode(_)
            | Error::ModeOutOfRange { .. }
            | Error::GridTooSmall { .. }
            | Error::OddGrid(_)
            | Error::ShapeMismatch(..)
            | Error::NotUnimodular(..)
            | Error::NotHyperbolic(_)
            | Error::InvalidParameter { .. }
            | Error::Format(_) => 2,
            _ => 3,
        }
    }

    /// Short stable tag for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MeanMode(_) => "mean_mode",
            Error::ModeOutOfRange { .. } => "mode_out_of_range",
            Error::GridTooSmall { .. } => "grid_too_small",
            Error::OddGrid(_) => "odd_grid",
            Error::ShapeMismatch(..) => "shape_mismatch",
            Error::NotUnimodular(..) => "not_unimodular",
            Error::NotHyperbolic(_) => "not_hyperbolic",
            Error::DegenerateEigenbasis => "degenerate_eigenbasis",
            Error::TruncationOverflow { .. } => "truncation_overflow",
            Error::IntegerOverflow { .. } => "integer_overflow",
            Error::ZeroField => "zero_field",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::TailNotCertified { .. } => "tail_not_certified",
            Error::EmptyWindow(_) => "empty_window",
            Error::ZetaNonPositive { .. } => "zeta_non_positive",
            Error::ChecksFailed { .. } => "checks_failed",
            Error::Io(_) => "io",
            Error::Format(_) => "format",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            return Error::Io(e.to_string());
        }
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
