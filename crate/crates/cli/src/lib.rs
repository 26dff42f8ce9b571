//! Pipeline orchestration behind the `trait` binary.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod stages;

pub use config::{validate_config, RunConfig};
pub use manifest::Manifest;
pub use pipeline::{run_pipeline, PipelineOutputs};

/// Exit status for invalid configuration or arguments.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for failures while running.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

/// Parameter errors are the caller's to fix; everything else is a runtime
/// failure.
impl From<trait_core::Error> for CliError {
    fn from(e: trait_core::Error) -> Self {
        match e {
            trait_core::Error::InvalidParameter(m) => CliError::Validation(vec![m]),
            e => CliError::Runtime(e.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<trait_core::Error>() {
            Ok(core) => core.into(),
            Err(e) => CliError::Runtime(e),
        }
    }
}
