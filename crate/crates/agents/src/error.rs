use thiserror::Error;

use crate::chat::ChatError;
use crate::transcript::AgentTranscript;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("{agent}: reply still invalid after {retries} repair attempts: {message}")]
    Parse { agent: String, retries: u32, message: String, transcript: Box<AgentTranscript> },
    #[error("{agent}: {source}")]
    Backend {
        agent: String,
        #[source]
        source: ChatError,
    },
    #[error("{agent}: {message}")]
    Input { agent: String, message: String },
}

impl AgentError {
    pub fn transcript(&self) -> Option<&AgentTranscript> {
        match self {
            AgentError::Parse { transcript, .. } => Some(transcript),
            _ => None,
        }
    }
}
