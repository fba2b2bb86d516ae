//! The six planning agents. Each call sends one templated request, repairs
//! invalid replies by re-prompting with the validation error, and returns
//! the validated payload together with its transcript.

use scratchpad_core::{Bbox3, CameraSpec, Vec3, WorkspaceBounds};
use serde::Serialize;
use serde_json::json;

use crate::chat::{ChatBackend, ChatMessage, ChatRequest, ImageAttachment};
use crate::error::AgentError;
use crate::schema::{self, BboxPlan, CameraChoice, SubjectPlan, TransformSuggestions};
use crate::templates::{self, Template};
use crate::transcript::AgentTranscript;

pub const MAX_REPAIR_RETRIES: u32 = 2;
pub const PROPOSAL_COUNT: usize = 5;
pub const MULTIVIEW_NAMES: [&str; 4] = ["front", "left", "right", "top"];

/// Validated agent output and the record of how it was obtained.
#[derive(Clone, Debug)]
pub struct Outcome<T> {
    pub value: T,
    pub transcript: AgentTranscript,
}

fn repair_message(error: &str) -> String {
    format!(
        "Your previous reply could not be used: {error}. Reply again with a single fenced ```json block that follows the schema exactly."
    )
}

fn run<T: Serialize>(
    backend: &dyn ChatBackend,
    template: Template,
    messages: Vec<ChatMessage>,
    validate: impl Fn(&str) -> Result<T, String>,
) -> Result<Outcome<T>, AgentError> {
    let mut transcript = AgentTranscript::start(template.agent, template.version, backend.name());
    let mut request = ChatRequest { agent: template.agent.to_string(), messages };
    let mut attempt = 0;
    loop {
        let reply = backend
            .send(&request)
            .map_err(|source| AgentError::Backend { agent: template.agent.to_string(), source })?;
        transcript.request_hash = request.hash();
        transcript.messages = request.messages.clone();
        transcript.responses.push(reply.clone());
        transcript.raw_response = reply.clone();
        transcript.retries = attempt;
        match validate(&reply) {
            Ok(value) => {
                transcript.parsed = Some(serde_json::to_value(&value).expect("payload serializes"));
                return Ok(Outcome { value, transcript });
            }
            Err(message) if attempt == MAX_REPAIR_RETRIES => {
                log::warn!("{}: giving up after {attempt} repairs: {message}", template.agent);
                transcript.notes.push(format!("final reply invalid: {message}"));
                return Err(AgentError::Parse {
                    agent: template.agent.to_string(),
                    retries: attempt,
                    message,
                    transcript: Box::new(transcript),
                });
            }
            Err(message) => {
                log::debug!("{}: repair attempt {} after: {message}", template.agent, attempt + 1);
                transcript.notes.push(format!("attempt {attempt} invalid: {message}"));
                request.messages.push(ChatMessage::assistant(reply));
                request.messages.push(ChatMessage::user(repair_message(&message), Vec::new()));
                attempt += 1;
            }
        }
    }
}

fn input_error(template: Template, message: impl Into<String>) -> AgentError {
    AgentError::Input { agent: template.agent.to_string(), message: message.into() }
}

/// Decomposes the prompt into subjects, a background and an enhanced prompt.
pub fn extract_subjects(backend: &dyn ChatBackend, prompt: &str) -> Result<Outcome<SubjectPlan>, AgentError> {
    let t = templates::SUBJECT_EXTRACTOR;
    if prompt.trim().is_empty() {
        return Err(input_error(t, "prompt is empty"));
    }
    let messages = t.messages("", &json!({ "prompt": prompt }), Vec::new());
    run(backend, t, messages, |reply| crate::parse::parse_with(reply, schema::validate_subject_plan))
}

/// What the planners know about one subject.
#[derive(Clone, Debug)]
pub struct SubjectBrief {
    pub id: String,
    pub description: String,
    pub color: String,
    /// Mesh extents over the largest extent.
    pub aspect_ratio: Option<Vec3>,
    pub image: Option<ImageAttachment>,
}

pub struct BboxRequest<'a> {
    pub enhanced_prompt: &'a str,
    pub subjects: &'a [SubjectBrief],
    pub scene_description: &'a str,
    pub bounds: WorkspaceBounds,
}

/// Plans one box per subject and clamps each into the workspace.
pub fn plan_bboxes(backend: &dyn ChatBackend, req: &BboxRequest<'_>) -> Result<Outcome<BboxPlan>, AgentError> {
    let t = templates::BBOX_PLANNER;
    if req.subjects.is_empty() {
        return Err(input_error(t, "no subjects to place"));
    }
    let mut images = Vec::new();
    let mut subjects = Vec::new();
    for s in req.subjects {
        let ar = s.aspect_ratio.ok_or_else(|| input_error(t, format!("subject \"{}\" has no aspect ratio", s.id)))?;
        let image = s.image.as_ref().map(|img| {
            images.push(img.clone());
            img.label.clone()
        });
        subjects.push(json!({
            "id": s.id,
            "description": s.description,
            "color": s.color,
            "aspect_ratio": ar,
            "identity_image": image,
        }));
    }
    let inputs = json!({ "enhanced_prompt": req.enhanced_prompt, "subjects": subjects });
    let messages = t.messages(req.scene_description, &inputs, images);
    let ids: Vec<String> = req.subjects.iter().map(|s| s.id.clone()).collect();
    let mut out = run(backend, t, messages, |reply| {
        crate::parse::parse_with(reply, |v| schema::validate_bbox_plan(v, &ids))
    })?;
    for b in &mut out.value.boxes {
        if let Some(clamped) = req.bounds.clamp_bbox(&b.bbox) {
            out.transcript.notes.push(format!(
                "clamped box of \"{}\" into the workspace: center {:?} extents {:?} -> center {:?} extents {:?}",
                b.id,
                b.bbox.center.to_array(),
                b.bbox.extents.to_array(),
                clamped.center.to_array(),
                clamped.extents.to_array()
            ));
            b.unclamped = Some(b.bbox);
            b.bbox = clamped;
        }
    }
    out.transcript.parsed = Some(serde_json::to_value(&out.value).expect("payload serializes"));
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SubjectCrop {
    pub id: String,
    pub description: String,
    pub crop: ImageAttachment,
}

/// One free-text orientation per crop, in crop order. No crops, no call.
pub fn estimate_orientation(
    backend: &dyn ChatBackend,
    crops: &[SubjectCrop],
) -> Result<Outcome<Vec<String>>, AgentError> {
    let t = templates::ORIENTATION_ESTIMATOR;
    if crops.is_empty() {
        let mut transcript = AgentTranscript::start(t.agent, t.version, backend.name());
        transcript.parsed = Some(json!([]));
        transcript.notes.push("no subjects; backend not called".into());
        return Ok(Outcome { value: Vec::new(), transcript });
    }
    let inputs = json!({
        "subjects": crops
            .iter()
            .map(|c| json!({ "id": c.id, "description": c.description, "crop": c.crop.label }))
            .collect::<Vec<_>>()
    });
    let messages = t.messages("", &inputs, crops.iter().map(|c| c.crop.clone()).collect());
    let ids: Vec<String> = crops.iter().map(|c| c.id.clone()).collect();
    run(backend, t, messages, |reply| crate::parse::parse_with(reply, |v| schema::validate_orientations(v, &ids)))
}

#[derive(Clone, Debug)]
pub struct OrientedSubject {
    pub id: String,
    pub description: String,
    pub estimated: String,
    pub target: String,
}

pub struct TransformRequest<'a> {
    pub enhanced_prompt: &'a str,
    /// Multiview renders labeled by view name.
    pub renders: &'a [ImageAttachment],
    pub subjects: &'a [OrientedSubject],
    pub scene_description: &'a str,
}

pub fn plan_transforms(
    backend: &dyn ChatBackend,
    req: &TransformRequest<'_>,
) -> Result<Outcome<TransformSuggestions>, AgentError> {
    let t = templates::TRANSFORM_PLANNER;
    for view in MULTIVIEW_NAMES {
        if !req.renders.iter().any(|r| r.label == view) {
            return Err(input_error(t, format!("missing the {view} render")));
        }
    }
    let inputs = json!({
        "enhanced_prompt": req.enhanced_prompt,
        "renders": req.renders.iter().map(|r| r.label.clone()).collect::<Vec<_>>(),
        "subjects": req.subjects.iter().map(|s| json!({
            "id": s.id,
            "description": s.description,
            "estimated_orientation": s.estimated,
            "target_orientation": s.target,
        })).collect::<Vec<_>>(),
    });
    let messages = t.messages(req.scene_description, &inputs, req.renders.to_vec());
    let ids: Vec<String> = req.subjects.iter().map(|s| s.id.clone()).collect();
    run(backend, t, messages, |reply| crate::parse::parse_with(reply, |v| schema::validate_transforms(v, &ids)))
}

/// Index into the proposal renders; falls back to the front view (0) when
/// no attempt yields a usable index.
pub fn pick_camera(
    backend: &dyn ChatBackend,
    prompt: &str,
    renders: &[ImageAttachment],
) -> Result<Outcome<CameraChoice>, AgentError> {
    let t = templates::CAMERA_PICKER;
    if renders.len() != PROPOSAL_COUNT {
        return Err(input_error(t, format!("expected {PROPOSAL_COUNT} proposal renders, got {}", renders.len())));
    }
    let inputs = json!({
        "prompt": prompt,
        "renders": renders.iter().map(|r| r.label.clone()).collect::<Vec<_>>(),
    });
    let messages = t.messages("", &inputs, renders.to_vec());
    let result = run(backend, t, messages, |reply| {
        schema::validate_camera_reply(reply, PROPOSAL_COUNT).map(|index| CameraChoice { index, fallback: false })
    });
    match result {
        Err(AgentError::Parse { transcript, message, .. }) => {
            let mut transcript = *transcript;
            let value = CameraChoice { index: 0, fallback: true };
            transcript.notes.push(format!("falling back to view 0 (front): {message}"));
            transcript.parsed = Some(serde_json::to_value(&value).expect("payload serializes"));
            Ok(Outcome { value, transcript })
        }
        other => other,
    }
}

#[derive(Clone, Debug)]
pub struct EditSubject {
    pub id: String,
    pub description: String,
    /// Current world-space box.
    pub bbox: Bbox3,
}

pub struct EditRequest<'a> {
    pub instruction: &'a str,
    pub image: ImageAttachment,
    pub camera: &'a CameraSpec,
    pub subjects: &'a [EditSubject],
    pub scene_description: &'a str,
}

/// Converts an image-level edit instruction into per-subject deltas.
pub fn plan_edit(backend: &dyn ChatBackend, req: &EditRequest<'_>) -> Result<Outcome<TransformSuggestions>, AgentError> {
    let t = templates::SUBJECT_EDITOR;
    if req.instruction.trim().is_empty() {
        return Err(input_error(t, "edit instruction is empty"));
    }
    let basis = req.camera.basis();
    let inputs = json!({
        "instruction": req.instruction,
        "image": req.image.label,
        "camera": {
            "spec": req.camera,
            "right": basis.right,
            "up": basis.up,
            "forward": basis.forward,
        },
        "subjects": req.subjects.iter().map(|s| json!({
            "id": s.id,
            "description": s.description,
            "bbox": s.bbox,
        })).collect::<Vec<_>>(),
    });
    let messages = t.messages(req.scene_description, &inputs, vec![req.image.clone()]);
    let ids: Vec<String> = req.subjects.iter().map(|s| s.id.clone()).collect();
    run(backend, t, messages, |reply| crate::parse::parse_with(reply, |v| schema::validate_transforms(v, &ids)))
}
