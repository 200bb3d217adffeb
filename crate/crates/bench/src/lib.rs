//! Benchmark drivers for the `rechain` scheduler.

pub mod config;
pub mod instances;
pub mod output;
pub mod runs;
pub mod verify;

use rechain::convert::ConvertError;
use rechain::model::ModelError;
use rechain::scheduler::SchedulerError;
use rechain::state::StateError;
use rechain::traffic::TrafficError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Bad configuration or arguments.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// Process exit code: 1 for input problems, 2 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Model(_) | BenchError::Convert(_) => 1,
            BenchError::Traffic(
                TrafficError::BadLoad(_)
                | TrafficError::BadParams(_)
                | TrafficError::UnknownModel(_)
                | TrafficError::Parse { .. }
                | TrafficError::NonMonotone { .. },
            ) => 1,
            _ => 2,
        }
    }
}
