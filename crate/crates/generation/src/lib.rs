//! Interfaces to the generative models behind the scratchpad pipeline
//! (text-to-image, image-to-3D, identity/depth compositor, object removal),
//! deterministic mocks for each, and multipart HTTP clients for remote
//! services.

pub mod backend;
pub mod codec;
pub mod config;
pub mod error;
pub mod http;
pub mod mock;

pub use backend::{ComposeRequest, Compositor, ImageTo3D, Removal, SubjectCondition, TextToImage};
pub use config::{Backends, EndpointsConfig};
pub use error::{BackendError, GenerationError};
pub use mock::{mock_compose, mock_image_to_3d, mock_recompose, mock_remove, mock_text_to_image, pastel};
