use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Inverting the Laplacian needs a mean-zero source.
    #[error("gauge violation: (0,0) coefficient has magnitude {magnitude:e}, expected mean-zero input")]
    GaugeViolation { magnitude: f64 },

    #[error("time step {dt} exceeds the advective stability bound; admissible dt <= {admissible}")]
    StepSize { dt: f64, admissible: f64 },

    #[error("numerical divergence detected after t = {last_good_time}")]
    Divergence { last_good_time: f64 },

    #[error("degenerate decay fit: {0}")]
    DegenerateFit(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}
