//! Fixture-driven chat backend.
//!
//! A fixture directory holds `responses/<request-hash>.txt` files and an
//! optional `rules.json`. Exact hash matches win; otherwise the first rule
//! whose filters all match supplies the reply; otherwise the request goes to
//! the fallback backend if one is set.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::chat::{sha256_hex, ChatBackend, ChatError, ChatRequest};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    /// Agent name the rule applies to; any agent when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
    /// Substring that must occur in the first user message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    /// Repair attempt (0 = first try) the rule applies to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<usize>,
    pub response: String,
}

impl Rule {
    pub fn new(agent: &str, response: impl Into<String>) -> Self {
        Self { agent: Some(agent.to_string()), response: response.into(), ..Self::default() }
    }

    pub fn containing(mut self, needle: impl Into<String>) -> Self {
        self.contains = Some(needle.into());
        self
    }

    pub fn on_attempt(mut self, attempt: usize) -> Self {
        self.attempt = Some(attempt);
        self
    }

    fn matches(&self, req: &ChatRequest) -> bool {
        self.agent.as_deref().is_none_or(|a| a == req.agent)
            && self.contains.as_deref().is_none_or(|c| req.first_user_text().contains(c))
            && self.attempt.is_none_or(|a| a == req.attempt())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("reading fixture {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub struct ScriptedBackend {
    name: String,
    by_hash: BTreeMap<String, String>,
    rules: Vec<Rule>,
    fallback: Option<Box<dyn ChatBackend>>,
    calls: AtomicUsize,
}

impl Default for ScriptedBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self { name: "scripted".into(), by_hash: BTreeMap::new(), rules: Vec::new(), fallback: None, calls: AtomicUsize::new(0) }
    }

    pub fn load(dir: &Path) -> Result<Self, FixtureError> {
        fn io(p: &Path) -> impl Fn(std::io::Error) -> FixtureError + '_ {
            move |source| FixtureError::Io { path: p.display().to_string(), source }
        }
        let mut backend = Self::new();
        let responses = dir.join("responses");
        if responses.is_dir() {
            for entry in fs::read_dir(&responses).map_err(io(&responses))? {
                let path = entry.map_err(io(&responses))?.path();
                if path.extension().is_some_and(|e| e == "txt") {
                    let hash = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                    let text = fs::read_to_string(&path).map_err(io(&path))?;
                    backend.by_hash.insert(hash, text);
                }
            }
        }
        let rules = dir.join("rules.json");
        if rules.is_file() {
            let bytes = fs::read(&rules).map_err(io(&rules))?;
            backend.rules = serde_json::from_slice(&bytes)
                .map_err(|source| FixtureError::Json { path: rules.display().to_string(), source })?;
        }
        Ok(backend)
    }

    pub fn with_response(mut self, hash: impl Into<String>, response: impl Into<String>) -> Self {
        self.by_hash.insert(hash.into(), response.into());
        self
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn with_fallback(mut self, backend: Box<dyn ChatBackend>) -> Self {
        self.fallback = Some(backend);
        self
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Requests answered so far (fallback included).
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Content hash of the fixture set, stable across machines.
    pub fn fingerprint(&self) -> String {
        let doc = serde_json::json!({
            "responses": self.by_hash,
            "rules": self.rules,
            "fallback": self.fallback.as_ref().map(|f| f.name().to_string()),
        });
        sha256_hex(&serde_json::to_vec(&doc).expect("fixture serializes"))
    }
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn deterministic(&self) -> bool {
        self.fallback.as_ref().is_none_or(|f| f.deterministic())
    }

    fn send(&self, request: &ChatRequest) -> Result<String, ChatError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let hash = request.hash();
        if let Some(r) = self.by_hash.get(&hash) {
            return Ok(r.clone());
        }
        if let Some(rule) = self.rules.iter().find(|r| r.matches(request)) {
            return Ok(rule.response.clone());
        }
        match &self.fallback {
            Some(f) => f.send(request),
            None => Err(ChatError::NoFixture { backend: self.name.clone(), agent: request.agent.clone(), hash }),
        }
    }
}
