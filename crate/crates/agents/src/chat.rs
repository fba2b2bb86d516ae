//! Chat backend abstraction and canonical request hashing.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// PNG attached to a message. Bytes are optional so that transcripts loaded
/// from disk (which only keep the digest and path) can be replayed against
/// hash-keyed backends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageAttachment {
    pub label: String,
    pub path: Option<String>,
    pub sha256: String,
    #[serde(skip)]
    pub png: Option<Arc<Vec<u8>>>,
}

impl ImageAttachment {
    pub fn new(label: impl Into<String>, path: Option<String>, png: Vec<u8>) -> Self {
        Self { label: label.into(), path, sha256: sha256_hex(&png), png: Some(Arc::new(png)) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<ImageAttachment>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        Self { role: Role::System, text: text.into(), images: Vec::new() }
    }

    pub fn user(text: impl Into<String>, images: Vec<ImageAttachment>) -> Self {
        Self { role: Role::User, text: text.into(), images }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self { role: Role::Assistant, text: text.into(), images: Vec::new() }
    }
}

/// One round trip to a chat model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub agent: String,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    /// Canonical bytes: compact JSON with images reduced to label + digest.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct Img<'a> {
            label: &'a str,
            sha256: &'a str,
        }
        #[derive(Serialize)]
        struct Msg<'a> {
            role: Role,
            text: &'a str,
            images: Vec<Img<'a>>,
        }
        #[derive(Serialize)]
        struct Req<'a> {
            agent: &'a str,
            messages: Vec<Msg<'a>>,
        }
        let req = Req {
            agent: &self.agent,
            messages: self
                .messages
                .iter()
                .map(|m| Msg {
                    role: m.role,
                    text: &m.text,
                    images: m.images.iter().map(|i| Img { label: &i.label, sha256: &i.sha256 }).collect(),
                })
                .collect(),
        };
        serde_json::to_vec(&req).expect("request serializes")
    }

    pub fn hash(&self) -> String {
        sha256_hex(&self.canonical_bytes())
    }

    /// Number of earlier assistant turns, i.e. which repair attempt this is.
    pub fn attempt(&self) -> usize {
        self.messages.iter().filter(|m| m.role == Role::Assistant).count()
    }

    /// Text of the first user message (the agent's inputs).
    pub fn first_user_text(&self) -> &str {
        self.messages.iter().find(|m| m.role == Role::User).map_or("", |m| m.text.as_str())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Error)]
pub enum ChatError {
    #[error("chat backend {backend}: {message}")]
    Unavailable { backend: String, message: String },
    #[error("chat backend {backend} has no response for request {hash} ({agent})")]
    NoFixture { backend: String, agent: String, hash: String },
    #[error("chat backend {backend} returned status {status}: {body}")]
    Status { backend: String, status: u16, body: String },
}

/// A chat-completion model. Implementations must be safe to share.
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;
    /// Same request bytes always produce the same response.
    fn deterministic(&self) -> bool;
    fn send(&self, request: &ChatRequest) -> Result<String, ChatError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Arc<B> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn deterministic(&self) -> bool {
        (**self).deterministic()
    }
    fn send(&self, request: &ChatRequest) -> Result<String, ChatError> {
        (**self).send(request)
    }
}
