use std::sync::Arc;

use scratchpad_agents::{ChatBackend, HeuristicBackend, HttpChatBackend, ScriptedBackend};
use scratchpad_generation::{Backends, EndpointsConfig};

use crate::error::PipelineError;

/// The chat model and generative backends a pipeline runs against.
#[derive(Clone)]
pub struct Engine {
    pub chat: Arc<dyn ChatBackend>,
    pub backends: Backends,
    /// Identifies the fixture set or model behind `chat`; part of run ids.
    pub fixture_set: String,
}

impl Engine {
    pub fn new(chat: Arc<dyn ChatBackend>, backends: Backends, fixture_set: impl Into<String>) -> Self {
        Self { chat, backends, fixture_set: fixture_set.into() }
    }

    /// Offline heuristic planner with mock generators.
    pub fn mock() -> Self {
        Self::new(Arc::new(HeuristicBackend::new()), Backends::mock(), "heuristic-v1")
    }

    /// Scripted replies (heuristic for anything unmatched) with mock
    /// generators.
    pub fn scripted(chat: ScriptedBackend) -> Self {
        let chat = chat.with_fallback(Box::new(HeuristicBackend::new()));
        let id = format!("scripted-{}", &chat.fingerprint()[..16]);
        Self::new(Arc::new(chat), Backends::mock(), id)
    }

    /// Remote chat model from the environment plus remote generators.
    pub fn live(endpoints: &EndpointsConfig) -> Result<Self, PipelineError> {
        let chat = HttpChatBackend::from_env().map_err(|e| PipelineError::Config(e.to_string()))?;
        let id = format!("live-{}", chat.model());
        Ok(Self::new(Arc::new(chat), Backends::live(&endpoints.clone().with_env_overrides()), id))
    }
}
