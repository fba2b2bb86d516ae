//! Backend selection: deterministic mocks or remote services.

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backend::{Compositor, ImageTo3D, Removal, TextToImage};
use crate::error::GenerationError;
use crate::http::{HttpClient, HttpCompositor, HttpConfig, HttpImageTo3D, HttpRemoval, HttpTextToImage, DEFAULT_ATTEMPTS};
use crate::mock::{MockCompositor, MockImageTo3D, MockRemoval, MockTextToImage};

pub const DEFAULT_API_KEY_ENV: &str = "SCRATCHPAD_BACKEND_API_KEY";

/// Endpoint file, TOML:
///
/// ```toml
/// text_to_image = "http://host:8001/generate"
/// image_to_3d = "http://host:8002/reconstruct"
/// compositor = "http://host:8003/compose"
/// removal = "http://host:8004/remove"
/// api_key_env = "SCRATCHPAD_BACKEND_API_KEY"   # optional
/// timeout_secs = 600                            # optional
/// attempts = 3                                  # optional
/// ```
///
/// Each URL can be overridden by `SCRATCHPAD_TEXT_TO_IMAGE_URL`,
/// `SCRATCHPAD_IMAGE_TO_3D_URL`, `SCRATCHPAD_COMPOSITOR_URL` and
/// `SCRATCHPAD_REMOVAL_URL`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointsConfig {
    pub text_to_image: String,
    pub image_to_3d: String,
    pub compositor: String,
    pub removal: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
    #[serde(default)]
    pub attempts: Option<u32>,
}

impl EndpointsConfig {
    pub fn from_toml(text: &str) -> Result<Self, GenerationError> {
        toml::from_str(text).map_err(|e| GenerationError::InvalidInput(format!("endpoint config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, GenerationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GenerationError::InvalidInput(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies the per-endpoint environment overrides.
    pub fn with_env_overrides(mut self) -> Self {
        for (var, slot) in [
            ("SCRATCHPAD_TEXT_TO_IMAGE_URL", &mut self.text_to_image),
            ("SCRATCHPAD_IMAGE_TO_3D_URL", &mut self.image_to_3d),
            ("SCRATCHPAD_COMPOSITOR_URL", &mut self.compositor),
            ("SCRATCHPAD_REMOVAL_URL", &mut self.removal),
        ] {
            if let Ok(v) = std::env::var(var) {
                *slot = v;
            }
        }
        self
    }

    fn http(&self, endpoint: &str) -> HttpClient {
        let key_env = self.api_key_env.as_deref().unwrap_or(DEFAULT_API_KEY_ENV);
        HttpClient::new(HttpConfig {
            api_key: std::env::var(key_env).ok(),
            timeout: Duration::from_secs(self.timeout_secs.unwrap_or(600)),
            attempts: self.attempts.unwrap_or(DEFAULT_ATTEMPTS),
            ..HttpConfig::new(endpoint)
        })
    }
}

/// The four model backends a pipeline run needs.
#[derive(Clone)]
pub struct Backends {
    pub text_to_image: Arc<dyn TextToImage>,
    pub image_to_3d: Arc<dyn ImageTo3D>,
    pub compositor: Arc<dyn Compositor>,
    pub removal: Arc<dyn Removal>,
}

impl Backends {
    pub fn mock() -> Self {
        Self {
            text_to_image: Arc::new(MockTextToImage),
            image_to_3d: Arc::new(MockImageTo3D),
            compositor: Arc::new(MockCompositor),
            removal: Arc::new(MockRemoval),
        }
    }

    pub fn live(config: &EndpointsConfig) -> Self {
        Self {
            text_to_image: Arc::new(HttpTextToImage(config.http(&config.text_to_image))),
            image_to_3d: Arc::new(HttpImageTo3D(config.http(&config.image_to_3d))),
            compositor: Arc::new(HttpCompositor(config.http(&config.compositor))),
            removal: Arc::new(HttpRemoval(config.http(&config.removal))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_endpoint_file() {
        let c = EndpointsConfig::from_toml(
            "text_to_image = \"http://a\"\nimage_to_3d = \"http://b\"\ncompositor = \"http://c\"\nremoval = \"http://d\"\nattempts = 5\n",
        )
        .unwrap();
        assert_eq!(c.attempts, Some(5));
        assert_eq!(c.removal, "http://d");
        assert!(EndpointsConfig::from_toml("text_to_image = \"x\"").is_err());
    }
}
