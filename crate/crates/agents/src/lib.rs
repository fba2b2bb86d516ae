//! Language-model agents that plan a 3D layout scene: subject extraction,
//! box planning, orientation estimation, transform planning, camera choice
//! and edit planning.
//!
//! Every agent renders a versioned prompt template, sends it through a
//! [`ChatBackend`], validates the reply against a strict schema and repairs
//! invalid replies by re-prompting up to [`MAX_REPAIR_RETRIES`] times.

pub mod agent;
pub mod chat;
pub mod error;
pub mod heuristic;
pub mod live;
pub mod parse;
pub mod relations;
pub mod schema;
pub mod scripted;
pub mod templates;
pub mod transcript;

pub use agent::{
    estimate_orientation, extract_subjects, pick_camera, plan_bboxes, plan_edit, plan_transforms, BboxRequest,
    EditRequest, EditSubject, OrientedSubject, Outcome, SubjectBrief, SubjectCrop, TransformRequest,
    MAX_REPAIR_RETRIES, MULTIVIEW_NAMES, PROPOSAL_COUNT,
};
pub use chat::{sha256_hex, ChatBackend, ChatError, ChatMessage, ChatRequest, ImageAttachment, Role};
pub use error::AgentError;
pub use heuristic::HeuristicBackend;
pub use live::HttpChatBackend;
pub use relations::{parse_relations, reference_camera, relation_holds, Relation, RelationTriple};
pub use schema::{
    BboxPlan, CameraChoice, PlannedBox, SubjectEntry, SubjectPlan, TransformSuggestion, TransformSuggestions,
};
pub use scripted::{FixtureError, Rule, ScriptedBackend};
pub use transcript::AgentTranscript;
