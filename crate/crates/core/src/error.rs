use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("cutoff mismatch: n_max {left_n}/hbar {left_hbar} vs n_max {right_n}/hbar {right_hbar}")]
    CutoffMismatch {
        left_n: usize,
        left_hbar: f64,
        right_n: usize,
        right_hbar: f64,
    },

    #[error("mode error: {0}")]
    Mode(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("cutoff too small: {lost:.3e} of the norm lies at or above n_max = {n_max}")]
    CutoffTooSmall { n_max: usize, lost: f64 },

    #[error("grid overflow: only {captured:.8} of the distribution lies on the grid")]
    GridOverflow { captured: f64 },

    #[error("resource is not Gaussian: {0}")]
    NonGaussianResource(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("all eigenvalues are non-positive, cannot normalize")]
    ZeroTrace,
}

pub type Result<T> = std::result::Result<T, Error>;
