//! Edits of a finished run: manual deltas, text instructions, and live
//! transform patches against the editable scene.

use std::collections::BTreeMap;

use image::{GrayImage, Luma, RgbImage};
use scratchpad_agents::{plan_edit, EditRequest, EditSubject, ImageAttachment};
use scratchpad_core::{
    project_subject_rect, render, scene_description, Bbox3, CameraSpec, PixelRect, Scene, SceneError, TransformTrs,
};
use scratchpad_generation::codec::{encode_mask_png, encode_png};
use scratchpad_generation::ComposeRequest;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, StepError};
use crate::manifest::{EditKind, Manifest};
use crate::run::{latest_image_rel, latest_image_scene_rel, scene_bytes, Pipeline};
use crate::stages::{self, agent_step, conditions, load_identities, load_image, load_json, load_scene, CameraRecord};
use crate::store::{Recorder, RunDir};

/// Mask rectangles grow by this fraction of their diagonal on every side.
pub const MASK_DILATION: f64 = 0.10;

#[derive(Clone, Debug, PartialEq)]
pub enum EditInput {
    Instruction(String),
    /// Per-subject deltas, applied in the given order.
    Deltas(Vec<(String, TransformTrs)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub subject: String,
    pub delta: TransformTrs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EditOutcome {
    pub number: usize,
    pub revision: u64,
    /// Subjects whose transform changed relative to the previous image.
    pub subjects: Vec<String>,
    /// Dilated rectangles that make up the mask.
    pub mask_rects: Vec<PixelRect>,
    pub deltas: Vec<(String, TransformTrs)>,
}

impl EditOutcome {
    pub fn dir(&self) -> String {
        format!("edits/{}", self.number)
    }
}

fn load_camera(dir: &RunDir) -> Result<CameraSpec, PipelineError> {
    Ok(load_json::<CameraRecord>(dir, stages::CAMERA_CHOICE)?.camera)
}

fn map_scene_error(e: SceneError) -> PipelineError {
    match e {
        SceneError::UnknownSubject(id) => PipelineError::UnknownSubject(id),
        SceneError::OutOfBounds { .. } => PipelineError::OutOfBounds(e),
        other => PipelineError::Edit(StepError::Scene(other)),
    }
}

/// Applies deltas in order and rejects any that leave the workspace.
pub fn apply_deltas(scene: &Scene, deltas: &[(String, TransformTrs)]) -> Result<Scene, PipelineError> {
    let mut next = scene.clone();
    for (id, delta) in deltas {
        next = next.transform_subject(id, delta).map_err(map_scene_error)?;
        next.check_subject_in_bounds(id).map_err(map_scene_error)?;
    }
    Ok(next)
}

/// Union of each subject's old and new projected rectangles, dilated.
pub fn edit_mask(
    before: &Scene,
    after: &Scene,
    camera: &CameraSpec,
    subjects: &[String],
) -> Result<(GrayImage, Vec<PixelRect>), PipelineError> {
    let (w, h) = (camera.width, camera.height);
    let mut mask = GrayImage::new(w, h);
    let mut rects = Vec::new();
    for id in subjects {
        for scene in [before, after] {
            let r = project_subject_rect(scene, camera, id).map_err(|e| PipelineError::Edit(e.into()))?;
            let d = r.dilate(MASK_DILATION * r.diagonal(), w, h);
            for y in d.y0.max(0)..d.y1.min(h as i64) {
                for x in d.x0.max(0)..d.x1.min(w as i64) {
                    mask.put_pixel(x as u32, y as u32, Luma([255]));
                }
            }
            rects.push(d);
        }
    }
    Ok((mask, rects))
}

fn changed_subjects(before: &Scene, after: &Scene) -> Vec<String> {
    after
        .subjects
        .iter()
        .zip(&before.subjects)
        .filter(|(a, b)| a.transform != b.transform)
        .map(|(a, _)| a.id.clone())
        .collect()
}

/// Takes `base` outside the mask and `inner` inside it.
fn merge_masked(base: &RgbImage, inner: &RgbImage, mask: &GrayImage) -> RgbImage {
    let mut out = base.clone();
    for (x, y, m) in mask.enumerate_pixels() {
        if m.0[0] != 0 {
            out.put_pixel(x, y, *inner.get_pixel(x, y));
        }
    }
    out
}

impl Pipeline {
    fn open_finished(&self, run_id: &str, base_revision: Option<u64>) -> Result<(RunDir, Manifest), PipelineError> {
        let dir = self.open(run_id)?;
        let m = dir.read_manifest()?;
        if !m.is_finished() {
            return Err(PipelineError::Incomplete(run_id.into()));
        }
        if let Some(base) = base_revision {
            if base != m.revision {
                return Err(PipelineError::StaleRevision { base, current: m.revision });
            }
        }
        Ok((dir, m))
    }

    /// Regenerates the affected region of the latest image after applying
    /// an edit, preserving every pixel outside the dilated mask.
    ///
    /// Pending transform patches on the editable scene are realized by the
    /// same edit.
    pub fn edit(&self, run_id: &str, input: &EditInput, base_revision: Option<u64>) -> Result<EditOutcome, PipelineError> {
        let (dir, mut m) = self.open_finished(run_id, base_revision)?;
        dir.verify(&m)?;
        let camera = load_camera(&dir)?;
        let before = load_scene(&dir, &latest_image_scene_rel(&m))?;
        let current = load_scene(&dir, stages::SCENE_CURRENT)?;
        let prev_rel = latest_image_rel(&m);
        let prev = load_image(&dir, &prev_rel)?;
        let number = m.edits.len() + 1;
        let edit_dir = format!("edits/{number}");
        let mut rec = Recorder::new(&dir);

        let (kind, deltas) = match input {
            EditInput::Deltas(d) => {
                for (id, _) in d {
                    current.subject(id).map_err(map_scene_error)?;
                }
                (EditKind::Manual, d.clone())
            }
            EditInput::Instruction(text) => {
                rec.write(&format!("{edit_dir}/instruction.txt"), text.as_bytes())?;
                let subjects: Vec<EditSubject> = current
                    .subjects
                    .iter()
                    .filter_map(|s| {
                        s.world_aabb().map(|b| EditSubject { id: s.id.clone(), description: s.prompt.clone(), bbox: Bbox3::from_aabb(&b) })
                    })
                    .collect();
                let description = scene_description(&current);
                let req = EditRequest {
                    instruction: text,
                    image: ImageAttachment::new("image", Some(prev_rel.clone()), dir.read(&prev_rel)?),
                    camera: &camera,
                    subjects: &subjects,
                    scene_description: &description,
                };
                let planned =
                    agent_step(&mut rec, &dir, plan_edit(self.engine.chat.as_ref(), &req)).map_err(PipelineError::Edit)?;
                (EditKind::Instruction, planned.transforms.iter().map(|t| (t.id.clone(), t.delta())).collect())
            }
        };

        let after = apply_deltas(&current, &deltas)?;
        let affected = changed_subjects(&before, &after);
        let (mask, mask_rects) = edit_mask(&before, &after, &camera, &affected)?;
        let rendered = render(&after, &camera, m.config.design).map_err(|e| PipelineError::Edit(e.into()))?;
        let (removed, image) = if mask.pixels().any(|p| p.0[0] != 0) {
            let removal = &self.engine.backends.removal;
            let removed = merge_masked(&prev, &removal.remove(&prev, &mask).map_err(|e| PipelineError::Edit(e.into()))?, &mask);
            let identities = load_identities(&dir, &after)?;
            let conds = conditions(&after, &camera, &identities).map_err(PipelineError::Edit)?;
            let req = ComposeRequest::from_render(after.enhanced_prompt.clone(), &rendered, conds, m.config.seed);
            let fresh = self
                .engine
                .backends
                .compositor
                .recompose(&removed, &mask, &req)
                .map_err(|e| PipelineError::Edit(e.into()))?;
            (removed.clone(), merge_masked(&removed, &fresh, &mask))
        } else {
            (prev.clone(), prev.clone())
        };

        let entries: Vec<DeltaEntry> =
            deltas.iter().map(|(subject, delta)| DeltaEntry { subject: subject.clone(), delta: *delta }).collect();
        rec.json(&format!("{edit_dir}/deltas.json"), &entries)?;
        rec.write(&format!("{edit_dir}/mask.png"), &encode_mask_png(&mask))?;
        rec.write(&format!("{edit_dir}/removed.png"), &encode_png(&removed))?;
        rec.render(&edit_dir, "render", &rendered)?;
        let scene_json = scene_bytes(&after);
        rec.write(&format!("{edit_dir}/scene.json"), &scene_json)?;
        rec.write(&format!("{edit_dir}/final.png"), &encode_png(&image))?;

        let files: BTreeMap<String, String> = rec.files;
        m.push_edit(number, kind, affected.clone(), files);
        self.write_current(&dir, &mut m, &scene_json)?;
        dir.write_manifest(&m)?;
        Ok(EditOutcome { number, revision: m.revision, subjects: affected, mask_rects, deltas })
    }

    /// Applies one delta to the editable scene and re-renders the chosen
    /// view into `renders/current.*`. The generated image is untouched until
    /// the next edit.
    pub fn patch_transform(
        &self,
        run_id: &str,
        subject: &str,
        delta: &TransformTrs,
        base_revision: u64,
    ) -> Result<u64, PipelineError> {
        let (dir, mut m) = self.open_finished(run_id, Some(base_revision))?;
        let camera = load_camera(&dir)?;
        let current = load_scene(&dir, stages::SCENE_CURRENT)?;
        let next = apply_deltas(&current, &[(subject.to_string(), *delta)])?;
        let out = render(&next, &camera, m.config.design).map_err(|e| PipelineError::Edit(e.into()))?;
        Recorder::new(&dir).render("renders", "current", &out)?;
        self.write_current(&dir, &mut m, &scene_bytes(&next))?;
        m.revision += 1;
        dir.write_manifest(&m)?;
        Ok(m.revision)
    }
}
