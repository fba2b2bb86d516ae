use thiserror::Error;

/// Failure talking to a remote model service.
#[derive(Debug, Error)]
#[error("{endpoint}: attempt {attempt}{}: {cause}", status.map(|s| format!(", status {s}")).unwrap_or_default())]
pub struct BackendError {
    pub endpoint: String,
    pub status: Option<u16>,
    pub attempt: u32,
    pub cause: String,
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("image: {0}")]
    Image(#[from] image::ImageError),
    #[error("mesh: {0}")]
    Mesh(#[from] scratchpad_core::ObjError),
}

impl GenerationError {
    /// True when the error means a remote service could not be reached or
    /// kept failing, as opposed to bad input.
    pub fn is_unavailable(&self) -> bool {
        matches!(self, GenerationError::Backend(_))
    }
}
