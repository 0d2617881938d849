//! Parameter sweeps behind the `harq-renewal` command-line tool.

mod config;
mod output;
mod sweeps;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::channel::ChannelError;
use crate::protocol::ProtocolError;
use crate::renewal::EstimatorError;

pub use config::{
    parse_theta_list, DeadlineSpec, ExperimentConfig, ExperimentKind, Grid, OutputFormat,
    Overrides, QueueSettings,
};
pub use output::{format_number, write_result, RunManifest, SweepResult};
pub use sweeps::{
    run_ec_vs_inverse_mu, run_ec_vs_rate, run_ec_vs_rate_deadline, run_ec_vs_rate_thetas,
    run_experiment, run_moments_vs_rate, run_queue_validate, run_variance_ratio_vs_rate,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("estimator failure: {0}")]
    Estimator(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Estimator(_) => 2,
            ExperimentError::Io(_) => 3,
        }
    }
}

impl From<EstimatorError> for ExperimentError {
    fn from(e: EstimatorError) -> Self {
        ExperimentError::Estimator(e.to_string())
    }
}

impl From<AnalysisError> for ExperimentError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidArgument(m) => ExperimentError::Config(m),
            other => ExperimentError::Estimator(other.to_string()),
        }
    }
}

impl From<ProtocolError> for ExperimentError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::InvalidSpec(m) => ExperimentError::Config(m),
            other => ExperimentError::Estimator(other.to_string()),
        }
    }
}

impl From<ChannelError> for ExperimentError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::Integration(_) => ExperimentError::Estimator(e.to_string()),
            _ => ExperimentError::Config(e.to_string()),
        }
    }
}
