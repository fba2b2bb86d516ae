//! Backend interfaces to the generative models.

use image::{GrayImage, RgbImage};
use scratchpad_core::render::output::DepthSidecar;
use scratchpad_core::{PixelRect, RenderOutput, TriMesh};

use crate::error::GenerationError;

pub trait TextToImage: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, prompt: &str, seed: u64) -> Result<RgbImage, GenerationError>;
}

pub trait ImageTo3D: Send + Sync {
    fn name(&self) -> &str;
    fn reconstruct(&self, image: &RgbImage, prompt: &str) -> Result<TriMesh, GenerationError>;
}

/// Identity- and depth-conditioned image generator.
pub trait Compositor: Send + Sync {
    fn name(&self) -> &str;
    fn compose(&self, request: &ComposeRequest) -> Result<RgbImage, GenerationError>;
    /// Regenerates the masked region only; pixels where `mask` is 0 come back
    /// unchanged.
    fn recompose(&self, base: &RgbImage, mask: &GrayImage, request: &ComposeRequest)
        -> Result<RgbImage, GenerationError>;
}

pub trait Removal: Send + Sync {
    fn name(&self) -> &str;
    fn remove(&self, image: &RgbImage, mask: &GrayImage) -> Result<RgbImage, GenerationError>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubjectCondition {
    /// Subject index; the id map stores `index + 1`.
    pub index: usize,
    pub identity: RgbImage,
    pub rect: PixelRect,
}

/// Everything the compositor is conditioned on.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposeRequest {
    pub enhanced_prompt: String,
    pub width: u32,
    pub height: u32,
    pub depth: Vec<f32>,
    pub sidecar: DepthSidecar,
    /// Per-pixel subject ids; may be empty.
    pub ids: Vec<u16>,
    pub subjects: Vec<SubjectCondition>,
    pub seed: u64,
}

impl ComposeRequest {
    pub fn from_render(
        enhanced_prompt: impl Into<String>,
        render: &RenderOutput,
        subjects: Vec<SubjectCondition>,
        seed: u64,
    ) -> Self {
        Self {
            enhanced_prompt: enhanced_prompt.into(),
            width: render.width,
            height: render.height,
            depth: render.depth.clone(),
            sidecar: render.sidecar(),
            ids: render.subject_ids.clone(),
            subjects,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        let n = self.width as usize * self.height as usize;
        if n == 0 {
            return Err(GenerationError::InvalidInput("image size is zero".into()));
        }
        if self.depth.len() != n {
            return Err(GenerationError::InvalidInput(format!("depth has {} values for {n} pixels", self.depth.len())));
        }
        if !self.ids.is_empty() && self.ids.len() != n {
            return Err(GenerationError::InvalidInput(format!("id map has {} values for {n} pixels", self.ids.len())));
        }
        if self.sidecar.width != self.width || self.sidecar.height != self.height {
            return Err(GenerationError::InvalidInput("depth sidecar size does not match".into()));
        }
        for s in &self.subjects {
            if s.identity.width() == 0 || s.identity.height() == 0 {
                return Err(GenerationError::InvalidInput(format!("identity image of subject {} is empty", s.index)));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_mask(image: &RgbImage, mask: &GrayImage) -> Result<(), GenerationError> {
    if image.dimensions() != mask.dimensions() {
        return Err(GenerationError::InvalidInput(format!(
            "mask is {:?} but image is {:?}",
            mask.dimensions(),
            image.dimensions()
        )));
    }
    Ok(())
}
