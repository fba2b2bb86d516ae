use std::fs;
use std::path::Path;

use scratchpad_agents::{Rule, ScriptedBackend};
use scratchpad_core::render::output::read_depth;
use scratchpad_core::{deserialize_scene, proposal_cameras, render, Scene, TransformTrs, Vec3};
use scratchpad_generation::codec::{decode_mask_png, decode_png};
use scratchpad_pipeline::{
    normalized_tree, CameraRecord, EditInput, EditKind, Engine, Pipeline, PipelineError, RunConfig, RunOptions, Stage,
    StageStatus,
};

const PROMPT: &str = "a cat to the left of a dog";

fn config() -> RunConfig {
    RunConfig { seed: 7, width: 256, height: 256, ..RunConfig::default() }
}

fn fenced(body: &str) -> String {
    format!("```json\n{body}\n```")
}

fn scene_at(dir: &Path, rel: &str) -> Scene {
    deserialize_scene(&fs::read(dir.join(rel)).unwrap()).unwrap()
}

fn copy_tree(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let p = e.unwrap().path();
        let dest = to.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_tree(&p, &dest);
        } else {
            fs::copy(&p, &dest).unwrap();
        }
    }
}

fn generated(root: &Path) -> (Pipeline, scratchpad_pipeline::RunArtifacts) {
    let p = Pipeline::new(Engine::mock(), root);
    let run = p.generate(PROMPT, &config(), &RunOptions::default()).unwrap();
    (p, run)
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (_, ra) = generated(a.path());
    let (_, rb) = generated(b.path());
    assert_eq!(ra.run_id, rb.run_id);
    assert!(ra.manifest.is_finished());
    let (ta, tb) = (normalized_tree(&ra.dir).unwrap(), normalized_tree(&rb.dir).unwrap());
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(v == &tb[k], "{k} differs");
    }
    for f in [
        "manifest.json",
        "prompt.txt",
        "plan/subject_plan.json",
        "plan/bbox_plan.json",
        "plan/transforms.json",
        "plan/camera_choice.json",
        "subjects/0/identity.png",
        "subjects/1/mesh.obj",
        "scene/after_stage2.json",
        "scene/after_stage3.json",
        "renders/front.depth.json",
        "renders/proposal4.ids.png",
        "images/intermediate.png",
        "images/final.png",
        "transcripts/subject_extractor-1.json",
        "transcripts/camera_picker-1.json",
    ] {
        assert!(ta.contains_key(f), "missing {f}");
    }
}

#[test]
fn run_id_depends_on_every_input() {
    let p = Pipeline::new(Engine::mock(), "unused");
    let base = p.run_id(PROMPT, &config());
    assert_ne!(base, p.run_id("a cat", &config()));
    assert_ne!(base, p.run_id(PROMPT, &RunConfig { seed: 8, ..config() }));
    let scripted = Pipeline::new(Engine::scripted(ScriptedBackend::new().with_rule(Rule::new("camera_picker", "1"))), "x");
    assert_ne!(base, scripted.run_id(PROMPT, &config()));
}

fn orientation_engine(cat: &str) -> Engine {
    let reply = fenced(&format!(
        r#"{{"orientations":[{{"id":"cat","orientation":"{cat}"}},{{"id":"dog","orientation":"facing the camera"}}]}}"#
    ));
    Engine::scripted(ScriptedBackend::new().with_rule(Rule::new("orientation_estimator", reply)))
}

#[test]
fn matching_orientations_leave_the_layout_alone() {
    let root = tempfile::tempdir().unwrap();
    let p = Pipeline::new(orientation_engine("facing the camera"), root.path());
    let run = p.generate(PROMPT, &config(), &RunOptions::default()).unwrap();
    let a = scene_at(&run.dir, "scene/after_stage2.json");
    let mut b = scene_at(&run.dir, "scene/after_stage3.json");
    assert_eq!(b.subjects[0].estimated_orientation.as_deref(), Some("facing the camera"));
    for s in &mut b.subjects {
        s.estimated_orientation = None;
    }
    assert_eq!(a, b);
}

#[test]
fn mismatched_orientation_rotates_the_subject() {
    let root = tempfile::tempdir().unwrap();
    let p = Pipeline::new(orientation_engine("facing left"), root.path());
    let run = p.generate(PROMPT, &config(), &RunOptions::default()).unwrap();
    let a = scene_at(&run.dir, "scene/after_stage2.json");
    let b = scene_at(&run.dir, "scene/after_stage3.json");
    let (ca, cb) = (a.subject("cat").unwrap(), b.subject("cat").unwrap());
    assert!((cb.transform.rotation.y - ca.transform.rotation.y - 90.0).abs() < 1e-9);
    let (ba, bb) = (ca.world_aabb().unwrap().center(), cb.world_aabb().unwrap().center());
    assert!((ba - bb).norm() < 1e-9);
    assert_eq!(a.subject("dog").unwrap().transform, b.subject("dog").unwrap().transform);
}

#[test]
fn chosen_top_view_drives_the_final_render() {
    let root = tempfile::tempdir().unwrap();
    let engine = Engine::scripted(ScriptedBackend::new().with_rule(Rule::new("camera_picker", "4")));
    let p = Pipeline::new(engine, root.path());
    let run = p.generate(PROMPT, &config(), &RunOptions::default()).unwrap();
    assert_eq!(run.manifest.chosen_camera, Some(4));
    let scene = scene_at(&run.dir, "scene/after_stage3.json");
    let c = config();
    let expected = proposal_cameras(&scene, c.vfov_deg, c.width, c.height).unwrap()[4];
    let rec: CameraRecord = serde_json::from_slice(&fs::read(run.dir.join("plan/camera_choice.json")).unwrap()).unwrap();
    assert_eq!(rec.camera, expected);
    assert_eq!(rec.view, "proposal4");
    let (_, depth) = read_depth(&run.dir.join("renders"), "final").unwrap();
    let oracle = render(&scene, &expected, c.design).unwrap();
    assert_eq!(depth.iter().map(|d| d.to_bits()).collect::<Vec<_>>(), oracle.depth.iter().map(|d| d.to_bits()).collect::<Vec<_>>());
}

#[test]
fn final_depth_is_the_chosen_proposal_render() {
    let root = tempfile::tempdir().unwrap();
    let (_, run) = generated(root.path());
    let idx = run.manifest.chosen_camera.unwrap();
    let scene = scene_at(&run.dir, "scene/after_stage3.json");
    let c = config();
    let cam = proposal_cameras(&scene, c.vfov_deg, c.width, c.height).unwrap()[idx];
    let (_, depth) = read_depth(&run.dir.join("renders"), "final").unwrap();
    assert_eq!(depth, render(&scene, &cam, c.design).unwrap().depth);
}

#[test]
fn resume_after_layout_keeps_earlier_files() {
    let root = tempfile::tempdir().unwrap();
    let p = Pipeline::new(Engine::mock(), root.path());
    let partial = p.generate(PROMPT, &config(), &RunOptions { stop_after: Some(Stage::Layout) }).unwrap();
    assert!(partial.manifest.is_complete(Stage::Layout));
    assert_eq!(partial.manifest.stage(Stage::Orientation).status, StageStatus::Pending);
    assert!(!partial.final_image().exists());
    let before: Vec<_> = partial.manifest.tracked_files().map(|(p, d)| (p.clone(), d.clone())).collect();

    let done = p.resume(&partial.run_id, &RunOptions::default()).unwrap();
    assert!(done.manifest.is_finished());
    for (path, d) in &before {
        assert_eq!(done.manifest.tracked_files().find(|(p, _)| *p == path).unwrap().1, d);
    }
    assert!(!done.dir.join("transcripts/subject_extractor-2.json").exists());
    assert!(!done.dir.join("transcripts/bbox_planner-2.json").exists());

    let fresh_root = tempfile::tempdir().unwrap();
    let (_, fresh) = generated(fresh_root.path());
    assert_eq!(normalized_tree(&done.dir).unwrap(), normalized_tree(&fresh.dir).unwrap());
}

#[test]
fn resuming_a_finished_run_changes_nothing() {
    let root = tempfile::tempdir().unwrap();
    let (p, run) = generated(root.path());
    let before = normalized_tree(&run.dir).unwrap();
    p.resume(&run.run_id, &RunOptions::default()).unwrap();
    assert_eq!(normalized_tree(&run.dir).unwrap(), before);
}

#[test]
fn corrupted_file_is_named() {
    let root = tempfile::tempdir().unwrap();
    let p = Pipeline::new(Engine::mock(), root.path());
    let run = p.generate(PROMPT, &config(), &RunOptions { stop_after: Some(Stage::Layout) }).unwrap();
    let path = run.dir.join("scene/after_stage2.json");
    let mut bytes = fs::read(&path).unwrap();
    bytes.push(b' ');
    fs::write(&path, bytes).unwrap();
    match p.resume(&run.run_id, &RunOptions::default()) {
        Err(PipelineError::Integrity { file, .. }) => assert_eq!(file, "scene/after_stage2.json"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn stage_failure_is_recorded_and_resumable() {
    let root = tempfile::tempdir().unwrap();
    let broken = Engine::scripted(ScriptedBackend::new().with_rule(Rule::new("bbox_planner", "no boxes today")));
    let p = Pipeline::new(broken, root.path());
    let err = p.generate(PROMPT, &config(), &RunOptions::default()).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Layout));
    assert!(!err.is_unavailable());
    let id = p.run_id(PROMPT, &config());
    let m = p.load(&id).unwrap().manifest;
    assert!(m.is_complete(Stage::Subjects));
    assert_eq!(m.stage(Stage::Layout).status, StageStatus::Failed);
    assert!(m.stage(Stage::Layout).error.as_deref().unwrap().contains("bbox_planner"));
    assert!(root.path().join(&id).join("transcripts/bbox_planner-1.json").exists());

    let fixed = Pipeline::new(Engine::mock(), root.path());
    let done = fixed.resume(&id, &RunOptions::default()).unwrap();
    assert!(done.manifest.is_finished());
}

#[test]
fn manifest_with_stage_gap_is_rejected() {
    let root = tempfile::tempdir().unwrap();
    let p = Pipeline::new(Engine::mock(), root.path());
    let run = p.generate(PROMPT, &config(), &RunOptions { stop_after: Some(Stage::Subjects) }).unwrap();
    let path = run.dir.join("manifest.json");
    let mut m: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    m["stages"][2]["status"] = "complete".into();
    fs::write(&path, serde_json::to_vec_pretty(&m).unwrap()).unwrap();
    assert!(matches!(p.load(&run.run_id), Err(PipelineError::Corrupt { .. })));
}

fn assert_outside_mask_equal(dir: &Path, before: &str, after: &str, mask: &str) -> usize {
    let (a, b) = (decode_png(&fs::read(dir.join(before)).unwrap()).unwrap(), decode_png(&fs::read(dir.join(after)).unwrap()).unwrap());
    let m = decode_mask_png(&fs::read(dir.join(mask)).unwrap()).unwrap();
    let mut inside = 0;
    for (x, y, px) in m.enumerate_pixels() {
        if px.0[0] == 0 {
            assert_eq!(a.get_pixel(x, y), b.get_pixel(x, y), "pixel ({x},{y}) changed outside the mask");
        } else {
            inside += 1;
        }
    }
    inside
}

#[test]
fn manual_translation_preserves_background() {
    let root = tempfile::tempdir().unwrap();
    let (p, run) = generated(root.path());
    let delta = TransformTrs::from_translation(Vec3::new(1.0, 0.0, 0.0));
    let out = p.edit(&run.run_id, &EditInput::Deltas(vec![("cat".into(), delta)]), None).unwrap();
    assert_eq!(out.number, 1);
    assert_eq!(out.subjects, vec!["cat".to_string()]);
    assert_eq!(out.revision, 2);
    let inside = assert_outside_mask_equal(&run.dir, "images/final.png", "edits/1/final.png", "edits/1/mask.png");
    assert!(inside > 0);
    for f in ["deltas.json", "mask.png", "scene.json", "final.png", "render.depth"] {
        assert!(run.dir.join("edits/1").join(f).exists(), "{f}");
    }
    let moved = scene_at(&run.dir, "edits/1/scene.json");
    let orig = scene_at(&run.dir, "scene/after_stage3.json");
    let shift = moved.subject("cat").unwrap().transform.translation - orig.subject("cat").unwrap().transform.translation;
    assert!((shift - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    let m = p.verify(&run.run_id).unwrap().manifest;
    assert_eq!(m.edits[0].kind, EditKind::Manual);
    assert_eq!(p.current_scene(&run.run_id).unwrap(), (moved, 2));
}

#[test]
fn identity_edit_reproduces_the_image() {
    let root = tempfile::tempdir().unwrap();
    let (p, run) = generated(root.path());
    let out = p.edit(&run.run_id, &EditInput::Deltas(vec![("dog".into(), TransformTrs::identity())]), None).unwrap();
    assert!(out.subjects.is_empty());
    assert_eq!(fs::read(run.dir.join("edits/1/final.png")).unwrap(), fs::read(run.final_image()).unwrap());
}

#[test]
fn disjoint_edits_commute() {
    let root = tempfile::tempdir().unwrap();
    let p = Pipeline::new(Engine::mock(), root.path());
    let run = p.generate("a cat, a vase and a dog", &config(), &RunOptions::default()).unwrap();
    let other = tempfile::tempdir().unwrap();
    copy_tree(&run.dir, &other.path().join(&run.run_id));
    let q = Pipeline::new(Engine::mock(), other.path());

    let e1 = EditInput::Deltas(vec![("cat".into(), TransformTrs::from_translation(Vec3::new(0.0, 0.0, 0.3)))]);
    let e2 = EditInput::Deltas(vec![("dog".into(), TransformTrs::from_rotation(Vec3::new(0.0, 30.0, 0.0)))]);
    let a1 = p.edit(&run.run_id, &e1, None).unwrap();
    let a2 = p.edit(&run.run_id, &e2, None).unwrap();
    for r in &a1.mask_rects {
        assert!(a2.mask_rects.iter().all(|o| !r.intersects(o)), "fixture masks overlap");
    }
    q.edit(&run.run_id, &e2, None).unwrap();
    q.edit(&run.run_id, &e1, None).unwrap();
    let ab = fs::read(run.dir.join("edits/2/final.png")).unwrap();
    let ba = fs::read(other.path().join(&run.run_id).join("edits/2/final.png")).unwrap();
    assert_eq!(ab, ba);
}

#[test]
fn text_edit_moves_toward_image_right() {
    let root = tempfile::tempdir().unwrap();
    let (p, run) = generated(root.path());
    let out = p.edit(&run.run_id, &EditInput::Instruction("move the dog 1 unit to the right".into()), None).unwrap();
    assert_eq!(out.deltas.len(), 1);
    assert_eq!(out.deltas[0].0, "dog");
    assert!((out.deltas[0].1.translation - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-9);
    assert_outside_mask_equal(&run.dir, "images/final.png", "edits/1/final.png", "edits/1/mask.png");
    assert!(run.dir.join("edits/1/instruction.txt").exists());
    assert!(run.dir.join("transcripts/subject_editor-1.json").exists());
    let m = p.verify(&run.run_id).unwrap().manifest;
    assert_eq!(m.edits[0].kind, EditKind::Instruction);
    assert!(m.edits[0].files.contains_key("transcripts/subject_editor-1.json"));
}

#[test]
fn edits_are_validated() {
    let root = tempfile::tempdir().unwrap();
    let (p, run) = generated(root.path());
    let far = EditInput::Deltas(vec![("cat".into(), TransformTrs::from_translation(Vec3::new(50.0, 0.0, 0.0)))]);
    match p.edit(&run.run_id, &far, None) {
        Err(PipelineError::OutOfBounds(e)) => assert!(e.to_string().contains("x spans")),
        other => panic!("unexpected {other:?}"),
    }
    let ghost = EditInput::Deltas(vec![("unicorn".into(), TransformTrs::identity())]);
    assert!(matches!(p.edit(&run.run_id, &ghost, None), Err(PipelineError::UnknownSubject(s)) if s == "unicorn"));
    assert!(matches!(
        p.edit(&run.run_id, &EditInput::Instruction("paint the unicorn blue".into()), None),
        Err(PipelineError::Edit(_))
    ));
    assert!(matches!(p.edit("nope", &ghost, None), Err(PipelineError::UnknownRun(_))));
    assert!(p.load(&run.run_id).unwrap().manifest.edits.is_empty());
}

#[test]
fn patches_use_optimistic_revisions() {
    let root = tempfile::tempdir().unwrap();
    let (p, run) = generated(root.path());
    let (scene, rev) = p.current_scene(&run.run_id).unwrap();
    assert_eq!(rev, 1);
    let r2 = p.patch_transform(&run.run_id, "cat", &TransformTrs::identity(), 1).unwrap();
    assert_eq!(r2, 2);
    assert_eq!(p.current_scene(&run.run_id).unwrap(), (scene.clone(), 2));
    let shift = TransformTrs::from_translation(Vec3::new(0.5, 0.0, 0.0));
    assert!(matches!(
        p.patch_transform(&run.run_id, "cat", &shift, 1),
        Err(PipelineError::StaleRevision { base: 1, current: 2 })
    ));
    assert_eq!(p.current_scene(&run.run_id).unwrap().0, scene);
    assert_eq!(p.patch_transform(&run.run_id, "cat", &shift, 2).unwrap(), 3);
    assert!(run.dir.join("renders/current.png").exists());
    // the next edit realizes the patched move
    let out = p.edit(&run.run_id, &EditInput::Deltas(Vec::new()), Some(3)).unwrap();
    assert_eq!(out.subjects, vec!["cat".to_string()]);
    assert_eq!(out.revision, 4);
    p.verify(&run.run_id).unwrap();
}
