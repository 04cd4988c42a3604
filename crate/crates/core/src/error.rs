use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid system model: {0}")]
    InvalidModel(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid channel bank: {0}")]
    InvalidChannels(String),

    #[error("channel index {index} out of range for {channels} channels")]
    ChannelIndex { index: usize, channels: usize },

    #[error(
        "not stabilizable: best reception probability {theta_star} does not exceed critical probability {theta_c}"
    )]
    NotStabilizable { theta_star: f64, theta_c: f64 },

    #[error("probability {0} outside [0, 1]")]
    Probability(f64),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
