//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use crate::chat::{ChatBackend, ChatError, ChatRequest, Role};

pub const ENV_ENDPOINT: &str = "SCRATCHPAD_CHAT_ENDPOINT";
pub const ENV_API_KEY: &str = "SCRATCHPAD_CHAT_API_KEY";
pub const ENV_MODEL: &str = "SCRATCHPAD_CHAT_MODEL";
pub const DEFAULT_MODEL: &str = "gpt-5";

pub struct HttpChatBackend {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    client: reqwest::blocking::Client,
}

impl HttpChatBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, model: impl Into<String>, timeout: Duration) -> Self {
        let client = reqwest::blocking::Client::builder().timeout(timeout).build().expect("http client builds");
        Self { endpoint: endpoint.into(), api_key, model: model.into(), client }
    }

    /// Reads the endpoint, key and model from the environment.
    pub fn from_env() -> Result<Self, ChatError> {
        let endpoint = std::env::var(ENV_ENDPOINT).map_err(|_| ChatError::Unavailable {
            backend: "http".into(),
            message: format!("{ENV_ENDPOINT} is not set"),
        })?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| DEFAULT_MODEL.into());
        Ok(Self::new(endpoint, std::env::var(ENV_API_KEY).ok(), model, Duration::from_secs(300)))
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Request body in the chat-completions wire format. Images travel as
    /// base64 PNG data URLs.
    pub fn body(&self, request: &ChatRequest) -> Result<Value, ChatError> {
        let mut messages = Vec::new();
        for m in &request.messages {
            let role = match m.role {
                Role::System => "system",
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            if m.images.is_empty() {
                messages.push(json!({ "role": role, "content": m.text }));
                continue;
            }
            let mut content = vec![json!({ "type": "text", "text": m.text })];
            for img in &m.images {
                let bytes = match (&img.png, &img.path) {
                    (Some(b), _) => b.as_ref().clone(),
                    (None, Some(p)) => std::fs::read(p).map_err(|e| self.unavailable(format!("reading image {p}: {e}")))?,
                    (None, None) => return Err(self.unavailable(format!("image {} has no pixels", img.label))),
                };
                content.push(json!({ "type": "text", "text": format!("[image: {}]", img.label) }));
                let url = format!("data:image/png;base64,{}", base64::engine::general_purpose::STANDARD.encode(bytes));
                content.push(json!({ "type": "image_url", "image_url": { "url": url } }));
            }
            messages.push(json!({ "role": role, "content": content }));
        }
        Ok(json!({ "model": self.model, "messages": messages }))
    }

    fn unavailable(&self, message: String) -> ChatError {
        ChatError::Unavailable { backend: format!("http {}", self.endpoint), message }
    }
}

impl ChatBackend for HttpChatBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn deterministic(&self) -> bool {
        false
    }

    fn send(&self, request: &ChatRequest) -> Result<String, ChatError> {
        let mut req = self.client.post(&self.endpoint).json(&self.body(request)?);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| self.unavailable(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| self.unavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(ChatError::Status { backend: self.endpoint.clone(), status: status.as_u16(), body: text });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| self.unavailable(format!("undecodable reply: {e}")))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| self.unavailable("reply has no choices[0].message.content".into()))
    }
}
