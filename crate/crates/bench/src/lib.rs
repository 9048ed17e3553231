//! Benchmark harness comparing activations on the sine, moons/circles and
//! MNIST-style tasks. Experiments are declared in TOML files and write tidy,
//! deterministic CSV.

pub mod config;
pub mod gradcheck;
pub mod output;
pub mod run;

use thiserror::Error;

pub use config::{default_config_text, DataSpec, ExperimentConfig, ExperimentKind};
pub use run::{run_experiment, RunSummary};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    /// Process exit status: 1 usage, 2 configuration, 3 numerical failure.
    /// I/O failures count as configuration errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 1,
            BenchError::Config(_) | BenchError::Io { .. } => 2,
            BenchError::Numerical(_) => 3,
        }
    }
}

impl From<wendland_core::datasets::DatasetError> for BenchError {
    fn from(e: wendland_core::datasets::DatasetError) -> Self {
        BenchError::Config(e.to_string())
    }
}
