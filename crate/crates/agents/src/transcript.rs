use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::chat::{ChatMessage, ChatRequest};

/// Audit record of one agent call, including any repair turns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentTranscript {
    pub agent: String,
    pub template_version: u32,
    pub backend: String,
    /// Messages of the final request sent (repair turns included).
    pub messages: Vec<ChatMessage>,
    pub request_hash: String,
    /// Raw reply to each attempt, in order.
    pub responses: Vec<String>,
    pub raw_response: String,
    /// Validated payload; absent when every attempt failed.
    pub parsed: Option<Value>,
    pub retries: u32,
    #[serde(default)]
    pub notes: Vec<String>,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
}

impl AgentTranscript {
    pub(crate) fn start(agent: &str, template_version: u32, backend: &str) -> Self {
        Self {
            agent: agent.to_string(),
            template_version,
            backend: backend.to_string(),
            messages: Vec::new(),
            request_hash: String::new(),
            responses: Vec::new(),
            raw_response: String::new(),
            parsed: None,
            retries: 0,
            notes: Vec::new(),
            timestamp_ms: now_ms(),
        }
    }

    /// The final request, as it was sent.
    pub fn request(&self) -> ChatRequest {
        ChatRequest { agent: self.agent.clone(), messages: self.messages.clone() }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("transcript serializes");
        v.push(b'\n');
        v
    }

    /// Same as [`to_json`](Self::to_json) with the timestamp zeroed, for
    /// content hashing.
    pub fn to_json_without_timestamp(&self) -> Vec<u8> {
        Self { timestamp_ms: 0, ..self.clone() }.to_json()
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}
