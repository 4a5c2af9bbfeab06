use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation error: {levels_kept} transmon levels requested but the charge basis only has {basis} states")]
    Truncation { levels_kept: usize, basis: usize },

    #[error("label ambiguity: best overlap for bare state {label} is {overlap:.3}")]
    LabelAmbiguity { label: String, overlap: f64 },

    #[error("fewer observations ({observations}) than free parameters ({parameters})")]
    DegenerateObservations { observations: usize, parameters: usize },

    #[error("resonator and filter modes are fully mixed (resonator weight {weight:.4})")]
    ModeMixing { weight: f64 },

    #[error("empty frequency grid")]
    EmptyGrid,

    #[error("singular covariance in mixture component {component}")]
    SingularCovariance { component: usize },

    #[error("every shot prepared in state {state} was discarded")]
    EmptyClass { state: String },

    #[error("sample period mismatch: {left} ns vs {right} ns")]
    SampleRateMismatch { left: f64, right: f64 },

    #[error("unstable exponential term with amplitude {amplitude}")]
    UnstableTerm { amplitude: f64 },

    #[error("ill-conditioned deconvolution system")]
    IllConditioned,

    #[error("phase unwrapping failed at sample {index}: step {step:.3} rad")]
    UnwrapFailure { index: usize, step: f64 },

    #[error("time step too large: phase per step {phase:.1} rad exceeds {limit:.1} rad")]
    StepTooLarge { phase: f64, limit: f64 },

    #[error("no avoided crossing inside the sweep (minimum splitting at index {index})")]
    NoCrossing { index: usize },

    #[error("CZ calibration failed: objective {objective:.3e} above threshold {threshold:.3e}")]
    CalibrationFailed { objective: f64, threshold: f64 },

    #[error("fit diverged: {0}")]
    FitDivergence(String),

    #[error("noise model cannot execute primitive {0}")]
    ModelMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
