//! The four generation stages. Each reads its inputs back from the run
//! directory so a resumed run sees exactly what a fresh one would.

use image::RgbImage;
use scratchpad_agents::{
    estimate_orientation, extract_subjects, pick_camera, plan_bboxes, plan_transforms, AgentError, BboxRequest,
    ImageAttachment, OrientedSubject, Outcome, SubjectBrief, SubjectCrop, SubjectPlan, TransformRequest,
};
use scratchpad_core::obj::{parse_obj, write_obj};
use scratchpad_core::{
    aspect_ratio, deserialize_scene, multiview_renders, place_in_bbox, project_subject_rect, proposal_renders,
    scene_description, serialize_scene, CameraSpec, Scene, TransformTrs, TriMesh,
};
use scratchpad_generation::codec::{decode_png, encode_png};
use scratchpad_generation::{ComposeRequest, SubjectCondition};
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{PipelineError, StepError};
use crate::manifest::Manifest;
use crate::store::{Recorder, RunDir};

pub const SUBJECT_PLAN: &str = "plan/subject_plan.json";
pub const BBOX_PLAN: &str = "plan/bbox_plan.json";
pub const TRANSFORMS: &str = "plan/transforms.json";
pub const CAMERA_CHOICE: &str = "plan/camera_choice.json";
pub const SCENE_STAGE2: &str = "scene/after_stage2.json";
pub const SCENE_STAGE3: &str = "scene/after_stage3.json";
pub const SCENE_CURRENT: &str = "scene/current.json";
pub const INTERMEDIATE: &str = "images/intermediate.png";
pub const FINAL: &str = "images/final.png";

/// What stage 4 persisted about the chosen camera.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub index: usize,
    pub fallback: bool,
    pub view: String,
    pub camera: CameraSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub suggestions: scratchpad_agents::TransformSuggestions,
    pub applied: Vec<String>,
    pub rejected: Vec<Rejection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: String,
}

pub(crate) struct StageCtx<'a> {
    pub engine: &'a Engine,
    pub dir: &'a RunDir,
    pub manifest: &'a Manifest,
}

type StepResult<T> = Result<T, StepError>;
type Files = std::collections::BTreeMap<String, String>;

fn pipe(e: PipelineError) -> StepError {
    StepError::Other(e.to_string())
}

pub(crate) fn subject_dir(index: usize) -> String {
    format!("subjects/{index}")
}

/// Next free `transcripts/<agent>-<n>.json`.
pub(crate) fn transcript_path(dir: &RunDir, agent: &str) -> String {
    let mut n = 1;
    while dir.exists(&format!("transcripts/{agent}-{n}.json")) {
        n += 1;
    }
    format!("transcripts/{agent}-{n}.json")
}

/// Persists the transcript whether or not the agent succeeded.
pub(crate) fn agent_step<T>(rec: &mut Recorder<'_>, dir: &RunDir, result: Result<Outcome<T>, AgentError>) -> StepResult<T> {
    match result {
        Ok(out) => {
            let rel = transcript_path(dir, &out.transcript.agent);
            rec.transcript(&rel, &out.transcript).map_err(pipe)?;
            Ok(out.value)
        }
        Err(e) => {
            if let Some(t) = e.transcript() {
                let rel = transcript_path(dir, &t.agent);
                if let Err(w) = dir.write(&rel, &t.to_json()) {
                    log::warn!("could not keep failed transcript: {w}");
                }
            }
            Err(e.into())
        }
    }
}

pub(crate) fn load_json<T: serde::de::DeserializeOwned>(dir: &RunDir, rel: &str) -> Result<T, PipelineError> {
    serde_json::from_slice(&dir.read(rel)?)
        .map_err(|e| PipelineError::Corrupt { path: rel.into(), message: e.to_string() })
}

pub(crate) fn load_scene(dir: &RunDir, rel: &str) -> Result<Scene, PipelineError> {
    deserialize_scene(&dir.read(rel)?).map_err(|e| PipelineError::Corrupt { path: rel.into(), message: e.to_string() })
}

pub(crate) fn load_image(dir: &RunDir, rel: &str) -> Result<RgbImage, PipelineError> {
    decode_png(&dir.read(rel)?).map_err(|e| PipelineError::Corrupt { path: rel.into(), message: e.to_string() })
}

fn load_mesh(dir: &RunDir, index: usize, id: &str) -> Result<TriMesh, PipelineError> {
    let rel = format!("{}/mesh.obj", subject_dir(index));
    let text = String::from_utf8(dir.read(&rel)?)
        .map_err(|e| PipelineError::Corrupt { path: rel.clone(), message: e.to_string() })?;
    parse_obj(id, &text).map_err(|e| PipelineError::Corrupt { path: rel, message: e.to_string() })
}

pub(crate) fn load_identities(dir: &RunDir, scene: &Scene) -> Result<Vec<RgbImage>, PipelineError> {
    (0..scene.subjects.len()).map(|i| load_image(dir, &format!("{}/identity.png", subject_dir(i)))).collect()
}

fn attachment(dir: &RunDir, label: impl Into<String>, rel: &str) -> Result<ImageAttachment, PipelineError> {
    Ok(ImageAttachment::new(label, Some(rel.to_string()), dir.read(rel)?))
}

/// Identity conditions with each subject's projected rectangle.
pub(crate) fn conditions(scene: &Scene, camera: &CameraSpec, identities: &[RgbImage]) -> StepResult<Vec<SubjectCondition>> {
    scene
        .subjects
        .iter()
        .zip(identities)
        .map(|(s, identity)| {
            Ok(SubjectCondition { index: s.index, identity: identity.clone(), rect: project_subject_rect(scene, camera, &s.id)? })
        })
        .collect()
}

/// Subject extraction, identity images and meshes.
pub(crate) fn stage_subjects(ctx: &StageCtx<'_>) -> StepResult<Files> {
    let StageCtx { engine, dir, manifest } = *ctx;
    let mut rec = Recorder::new(dir);
    rec.write("prompt.txt", manifest.prompt.as_bytes()).map_err(pipe)?;
    let plan = agent_step(&mut rec, dir, extract_subjects(engine.chat.as_ref(), &manifest.prompt))?;
    rec.json(SUBJECT_PLAN, &plan).map_err(pipe)?;

    let seed = manifest.config.seed;
    let jobs: Vec<(usize, &str, &str)> =
        plan.subjects.iter().enumerate().map(|(i, s)| (i, s.id.as_str(), s.description.as_str())).collect();
    let mut results: Vec<Option<StepResult<(RgbImage, TriMesh)>>> = (0..jobs.len()).map(|_| None).collect();
    for chunk in jobs.chunks(manifest.config.concurrency.max(1)) {
        let done: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&(i, id, description)| {
                    let backends = &engine.backends;
                    scope.spawn(move || -> StepResult<(usize, RgbImage, TriMesh)> {
                        let image = backends.text_to_image.generate(description, seed.wrapping_add(i as u64))?;
                        let mut mesh = backends.image_to_3d.reconstruct(&image, description)?;
                        mesh.id = id.to_string();
                        Ok((i, image, mesh))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("subject worker panicked")).collect()
        });
        for (job, r) in chunk.iter().zip(done) {
            results[job.0] = Some(r.map(|(_, image, mesh)| (image, mesh)));
        }
    }
    for ((i, _, description), r) in jobs.iter().zip(results) {
        let (image, mesh) = r.expect("every job ran")?;
        let d = subject_dir(*i);
        rec.write(&format!("{d}/prompt.txt"), description.as_bytes()).map_err(pipe)?;
        rec.png(&format!("{d}/identity.png"), &image).map_err(pipe)?;
        rec.write(&format!("{d}/mesh.obj"), write_obj(&mesh).as_bytes()).map_err(pipe)?;
    }
    Ok(rec.files)
}

/// Box planning and placement.
pub(crate) fn stage_layout(ctx: &StageCtx<'_>) -> StepResult<Files> {
    let StageCtx { engine, dir, manifest } = *ctx;
    let mut rec = Recorder::new(dir);
    let plan: SubjectPlan = load_json(dir, SUBJECT_PLAN).map_err(pipe)?;
    let mut scene = Scene::new(manifest.config.bounds);
    scene.background_prompt = plan.background.clone();
    scene.enhanced_prompt = plan.enhanced_prompt.clone();
    let mut briefs = Vec::new();
    for (i, s) in plan.subjects.iter().enumerate() {
        let mesh = load_mesh(dir, i, &s.id).map_err(pipe)?;
        let identity_rel = format!("{}/identity.png", subject_dir(i));
        briefs.push(SubjectBrief {
            id: s.id.clone(),
            description: s.description.clone(),
            color: scratchpad_core::palette_color(i).name.to_string(),
            aspect_ratio: Some(aspect_ratio(&mesh)),
            image: Some(attachment(dir, format!("identity-{}", s.id), &identity_rel).map_err(pipe)?),
        });
        scene = scene.with_subject(&s.id, &s.description)?.map_subject(&s.id, |subj| {
            subj.mesh = Some(mesh);
            subj.identity_image_ref = Some(identity_rel);
            Ok(())
        })?;
    }
    let description = scene_description(&scene);
    let req = BboxRequest {
        enhanced_prompt: &plan.enhanced_prompt,
        subjects: &briefs,
        scene_description: &description,
        bounds: manifest.config.bounds,
    };
    let boxes = agent_step(&mut rec, dir, plan_bboxes(engine.chat.as_ref(), &req))?;
    for b in &boxes.boxes {
        scene = scene.map_subject(&b.id, |subj| {
            let mesh = subj.mesh.as_ref().expect("mesh loaded above");
            subj.transform = place_in_bbox(mesh, &b.bbox);
            subj.planned_bbox = Some(b.bbox);
            subj.target_orientation = Some(b.target_orientation.clone());
            Ok(())
        })?;
    }
    scene.validate()?;
    rec.json(BBOX_PLAN, &boxes).map_err(pipe)?;
    rec.write(SCENE_STAGE2, &serialize_scene(&scene)).map_err(pipe)?;
    Ok(rec.files)
}

/// Intermediate image, orientation estimates and corrective transforms.
pub(crate) fn stage_orientation(ctx: &StageCtx<'_>) -> StepResult<Files> {
    let StageCtx { engine, dir, manifest } = *ctx;
    let cfg = &manifest.config;
    let mut rec = Recorder::new(dir);
    let mut scene = load_scene(dir, SCENE_STAGE2).map_err(pipe)?;
    let identities = load_identities(dir, &scene).map_err(pipe)?;

    let views = multiview_renders(&scene, cfg.design, cfg.vfov_deg, cfg.width, cfg.height)?;
    for (name, _, out) in &views {
        rec.render("renders", name, out).map_err(pipe)?;
    }
    let (_, front_cam, front) = &views[0];
    let req = ComposeRequest::from_render(
        scene.enhanced_prompt.clone(),
        front,
        conditions(&scene, front_cam, &identities)?,
        cfg.seed,
    );
    let intermediate = engine.backends.compositor.compose(&req)?;
    rec.png(INTERMEDIATE, &intermediate).map_err(pipe)?;

    let mut crops = Vec::new();
    for (s, cond) in scene.subjects.iter().zip(&req.subjects) {
        let r = cond.rect;
        if r.is_empty() {
            continue;
        }
        let crop = image::imageops::crop_imm(&intermediate, r.x0 as u32, r.y0 as u32, r.width() as u32, r.height() as u32)
            .to_image();
        let rel = format!("images/crops/{}.png", s.index);
        let png = encode_png(&crop);
        rec.write(&rel, &png).map_err(pipe)?;
        crops.push(SubjectCrop {
            id: s.id.clone(),
            description: s.prompt.clone(),
            crop: ImageAttachment::new(format!("crop-{}", s.id), Some(rel), png),
        });
    }
    let estimates = agent_step(&mut rec, dir, estimate_orientation(engine.chat.as_ref(), &crops))?;
    for (crop, est) in crops.iter().zip(&estimates) {
        scene = scene.map_subject(&crop.id, |s| {
            s.estimated_orientation = Some(est.clone());
            Ok(())
        })?;
    }

    let renders = views
        .iter()
        .map(|(name, _, _)| attachment(dir, name.clone(), &format!("renders/{name}.png")))
        .collect::<Result<Vec<_>, _>>()
        .map_err(pipe)?;
    let oriented: Vec<OrientedSubject> = scene
        .subjects
        .iter()
        .map(|s| OrientedSubject {
            id: s.id.clone(),
            description: s.prompt.clone(),
            estimated: s.estimated_orientation.clone().unwrap_or_else(|| "unknown".into()),
            target: s.target_orientation.clone().unwrap_or_else(|| "unknown".into()),
        })
        .collect();
    let description = scene_description(&scene);
    let treq = TransformRequest {
        enhanced_prompt: &scene.enhanced_prompt,
        renders: &renders,
        subjects: &oriented,
        scene_description: &description,
    };
    let suggestions = agent_step(&mut rec, dir, plan_transforms(engine.chat.as_ref(), &treq))?;

    let mut record = TransformRecord { suggestions: suggestions.clone(), applied: Vec::new(), rejected: Vec::new() };
    for s in &suggestions.transforms {
        let delta: TransformTrs = s.delta();
        let next = scene.transform_subject(&s.id, &delta)?;
        match next.check_subject_in_bounds(&s.id) {
            Ok(()) => {
                scene = next;
                record.applied.push(s.id.clone());
            }
            Err(e) => {
                log::warn!("rejecting transform for {}: {e}", s.id);
                record.rejected.push(Rejection { id: s.id.clone(), reason: e.to_string() });
            }
        }
    }
    rec.json(TRANSFORMS, &record).map_err(pipe)?;
    rec.write(SCENE_STAGE3, &serialize_scene(&scene)).map_err(pipe)?;
    Ok(rec.files)
}

/// Proposal views, camera choice and the final image.
pub(crate) fn stage_camera(ctx: &StageCtx<'_>) -> StepResult<(Files, usize)> {
    let StageCtx { engine, dir, manifest } = *ctx;
    let cfg = &manifest.config;
    let mut rec = Recorder::new(dir);
    let scene = load_scene(dir, SCENE_STAGE3).map_err(pipe)?;
    let identities = load_identities(dir, &scene).map_err(pipe)?;
    let proposals = proposal_renders(&scene, cfg.design, cfg.vfov_deg, cfg.width, cfg.height)?;
    for (name, _, out) in &proposals {
        rec.render("renders", name, out).map_err(pipe)?;
    }
    let attachments = proposals
        .iter()
        .map(|(name, _, _)| attachment(dir, name.clone(), &format!("renders/{name}.png")))
        .collect::<Result<Vec<_>, _>>()
        .map_err(pipe)?;
    let choice = agent_step(&mut rec, dir, pick_camera(engine.chat.as_ref(), &manifest.prompt, &attachments))?;
    let (view, camera, render) = &proposals[choice.index];
    rec.render("renders", "final", render).map_err(pipe)?;
    let req = ComposeRequest::from_render(
        scene.enhanced_prompt.clone(),
        render,
        conditions(&scene, camera, &identities)?,
        cfg.seed,
    );
    let image = engine.backends.compositor.compose(&req)?;
    rec.png(FINAL, &image).map_err(pipe)?;
    rec.json(
        CAMERA_CHOICE,
        &CameraRecord { index: choice.index, fallback: choice.fallback, view: view.clone(), camera: *camera },
    )
    .map_err(pipe)?;
    Ok((rec.files, choice.index))
}
