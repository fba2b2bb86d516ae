use scratchpad_core::render::camera::{DEFAULT_IMAGE_SIZE, DEFAULT_VFOV_DEG};
use scratchpad_core::{RenderDesign, WorkspaceBounds};
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Live,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "live" => Ok(BackendKind::Live),
            other => Err(format!("unknown backend {other:?} (expected mock or live)")),
        }
    }
}

/// Settings fixed for the whole run. Part of the run id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub design: RenderDesign,
    pub width: u32,
    pub height: u32,
    pub vfov_deg: f64,
    pub bounds: WorkspaceBounds,
    pub backend: BackendKind,
    /// Upper bound on concurrent per-subject backend calls.
    pub concurrency: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            design: RenderDesign::default(),
            width: DEFAULT_IMAGE_SIZE,
            height: DEFAULT_IMAGE_SIZE,
            vfov_deg: DEFAULT_VFOV_DEG,
            bounds: WorkspaceBounds::default(),
            backend: BackendKind::Mock,
            concurrency: 4,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("image size must be positive");
        }
        if !(self.vfov_deg > 0.0 && self.vfov_deg < 180.0) {
            return bad("vfov must lie in (0, 180) degrees");
        }
        if !self.bounds.is_valid() {
            return bad("workspace bounds must be positive and finite");
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1");
        }
        Ok(())
    }
}
