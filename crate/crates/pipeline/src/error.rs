use std::path::PathBuf;

use scratchpad_agents::{AgentError, ChatError};
use scratchpad_core::{RenderError, SceneError};
use scratchpad_generation::GenerationError;
use thiserror::Error;

use crate::manifest::Stage;

/// Why a stage or edit step failed.
#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("{0}")]
    Other(String),
}

impl StepError {
    pub fn is_unavailable(&self) -> bool {
        match self {
            StepError::Agent(AgentError::Backend { source, .. }) => {
                matches!(source, ChatError::Unavailable { .. } | ChatError::Status { .. })
            }
            StepError::Generation(e) => e.is_unavailable(),
            _ => false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: StepError,
    },
    #[error("edit failed: {0}")]
    Edit(#[source] StepError),
    #[error("integrity check failed for {file}: expected sha256 {expected}, found {actual}")]
    Integrity { file: String, expected: String, actual: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed run artifact {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("unknown run {0:?}")]
    UnknownRun(String),
    #[error("run {0} has not completed")]
    Incomplete(String),
    #[error("unknown subject {0:?}")]
    UnknownSubject(String),
    #[error("stale revision: based on {base}, current is {current}")]
    StaleRevision { base: u64, current: u64 },
    #[error("rejected: {0}")]
    OutOfBounds(SceneError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl PipelineError {
    /// True when a model backend could not be reached.
    pub fn is_unavailable(&self) -> bool {
        match self {
            PipelineError::Stage { source, .. } | PipelineError::Edit(source) => source.is_unavailable(),
            _ => false,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> PipelineError {
        let path = path.into();
        move |source| PipelineError::Io { path, source }
    }
}
