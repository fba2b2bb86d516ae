//! Four-stage generation pipeline over the 3D scratchpad (subjects, layout,
//! orientation, camera), the edit flow, and the hash-chained run directory
//! that records every intermediate artifact.
//!
//! ```text
//! runs/<run-id>/
//!   manifest.json  prompt.txt
//!   plan/          subject_plan.json bbox_plan.json transforms.json camera_choice.json
//!   subjects/<i>/  prompt.txt identity.png mesh.obj
//!   scene/         after_stage2.json after_stage3.json current.json
//!   renders/       <view>.png .depth .depth.json .depth.png .ids.png
//!   images/        intermediate.png final.png crops/<i>.png
//!   transcripts/   <agent>-<n>.json
//!   edits/<n>/     instruction.txt deltas.json mask.png removed.png scene.json final.png render.*
//! ```

pub mod config;
pub mod edit;
pub mod engine;
pub mod error;
pub mod manifest;
pub mod run;
pub mod stages;
pub mod store;

pub use config::{BackendKind, RunConfig};
pub use edit::{apply_deltas, edit_mask, EditInput, EditOutcome, MASK_DILATION};
pub use engine::Engine;
pub use error::{PipelineError, StepError};
pub use manifest::{EditKind, EditRecord, Manifest, Stage, StageRecord, StageStatus};
pub use run::{run_id, Pipeline, RunArtifacts, RunOptions};
pub use stages::CameraRecord;
pub use store::{normalized_tree, RunDir};
