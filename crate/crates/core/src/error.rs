use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error(
        "quadrature did not converge: estimated error {estimate:e} after {evaluations} evaluations"
    )]
    Quadrature { estimate: f64, evaluations: usize },

    #[error("step {step} is ill-conditioned: |1 - eta * w0| = {magnitude:e}")]
    StepConditioning { step: usize, magnitude: f64 },

    #[error(
        "resonant frequency: 1/omega = {inverse} is a positive integer; use the resonance formula"
    )]
    Resonance { inverse: f64 },

    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
