use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infinite area: exterior domains have no finite area")]
    InfiniteArea,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("kernel singularity: {0}")]
    Singular(String),
    #[error("backend not valid for this domain: {0}")]
    Backend(String),
    #[error("step too large: {0}")]
    StepTooLarge(String),
    #[error("walk-on-spheres did not converge: {failed} of {walkers} walkers exceeded {max_steps} steps")]
    WalkNonConvergence { failed: usize, walkers: usize, max_steps: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("level not reached within the horizon: {0}")]
    Horizon(String),
    #[error("tolerance not met: {message} (partial value {partial})")]
    Tolerance { message: String, partial: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
