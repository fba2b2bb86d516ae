//! Replays the reply corpus in `tests/fixtures/corpus` through every agent.
//! Valid replies must parse on the first attempt and match their expected
//! payload; invalid ones must exhaust the repair retries.

use std::path::Path;

use scratchpad_agents::{
    estimate_orientation, extract_subjects, pick_camera, plan_bboxes, plan_edit, plan_transforms, AgentError,
    AgentTranscript, BboxRequest, EditRequest, EditSubject, ImageAttachment, OrientedSubject, Rule,
    ScriptedBackend, SubjectBrief, SubjectCrop, TransformRequest, TransformSuggestions,
};
use scratchpad_core::{Bbox3, CameraSpec, Vec3, WorkspaceBounds};
use serde_json::Value;

pub const AGENTS: [&str; 6] =
    ["subject_extractor", "bbox_planner", "orientation_estimator", "transform_planner", "camera_picker", "subject_editor"];

pub struct CaseResult {
    pub agent: String,
    pub name: String,
    pub valid: bool,
    pub ok: bool,
    pub detail: String,
}

fn image(label: &str) -> ImageAttachment {
    ImageAttachment::new(label, None, label.as_bytes().to_vec())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn vec_matches(v: Option<Vec3>, e: &Value) -> bool {
    match (v, e.as_array()) {
        (None, None) => e.is_null(),
        (Some(v), Some(a)) => a.len() == 3 && (0..3).all(|i| close(v[i], a[i].as_f64().unwrap_or(f64::NAN))),
        _ => false,
    }
}

fn transforms_match(t: &TransformSuggestions, expect: &Value) -> Result<(), String> {
    let e = expect.as_object().ok_or("expectation is not an object")?;
    if t.transforms.len() != e.len() {
        return Err(format!("{} suggestions, expected {}", t.transforms.len(), e.len()));
    }
    for s in &t.transforms {
        let x = e.get(&s.id).ok_or_else(|| format!("unexpected subject {}", s.id))?;
        let scale_ok = match (s.scale, x["scale"].as_f64()) {
            (None, None) => true,
            (Some(a), Some(b)) => close(a, b),
            _ => false,
        };
        if !(vec_matches(s.rotation, &x["rotation"]) && vec_matches(s.translation, &x["translation"]) && scale_ok) {
            return Err(format!("suggestion for {} is {s:?}, expected {x}", s.id));
        }
    }
    Ok(())
}

enum Run {
    Parsed(Value, AgentTranscript),
    Failed(AgentError),
}

fn run_agent(agent: &str, backend: &ScriptedBackend) -> Run {
    let desc = "Workspace bounds: x in [-5, 5], y in [0, 5], z in [-5, 5].";
    let ids2 = |a: &str, b: &str| [a.to_string(), b.to_string()];
    let result: Result<(Value, AgentTranscript), AgentError> = match agent {
        "subject_extractor" => extract_subjects(backend, "a cat to the left of a dog in a park").map(|o| {
            let ids: Vec<&str> = o.value.subjects.iter().map(|s| s.id.as_str()).collect();
            (
                serde_json::json!({"ids": ids, "enhanced_prompt": o.value.enhanced_prompt, "background": o.value.background}),
                o.transcript,
            )
        }),
        "bbox_planner" => {
            let subjects: Vec<SubjectBrief> = ids2("cat", "dog")
                .iter()
                .map(|id| SubjectBrief {
                    id: id.clone(),
                    description: format!("a {id}"),
                    color: "red".into(),
                    aspect_ratio: Some(Vec3::new(1.0, 0.8, 0.5)),
                    image: Some(image(&format!("identity {id}"))),
                })
                .collect();
            let req = BboxRequest {
                enhanced_prompt: "A cat to the left of a dog.",
                subjects: &subjects,
                scene_description: desc,
                bounds: WorkspaceBounds::default(),
            };
            plan_bboxes(backend, &req).map(|o| {
                let mut m = serde_json::Map::new();
                for b in &o.value.boxes {
                    m.insert(
                        b.id.clone(),
                        serde_json::json!({"center": b.bbox.center, "extents": b.bbox.extents, "orientation": b.target_orientation}),
                    );
                }
                (Value::Object(m), o.transcript)
            })
        }
        "orientation_estimator" => {
            let crops: Vec<SubjectCrop> = ids2("cat", "dog")
                .iter()
                .enumerate()
                .map(|(i, id)| SubjectCrop { id: id.clone(), description: format!("a {id}"), crop: image(&format!("crop-{}", i + 1)) })
                .collect();
            estimate_orientation(backend, &crops).map(|o| (serde_json::json!(o.value), o.transcript))
        }
        "transform_planner" => {
            let renders: Vec<ImageAttachment> = ["front", "left", "right", "top"].iter().map(|v| image(v)).collect();
            let subjects: Vec<OrientedSubject> = ids2("cat", "dog")
                .iter()
                .map(|id| OrientedSubject {
                    id: id.clone(),
                    description: format!("a {id}"),
                    estimated: "facing left".into(),
                    target: "facing the camera".into(),
                })
                .collect();
            let req = TransformRequest { enhanced_prompt: "p", renders: &renders, subjects: &subjects, scene_description: desc };
            plan_transforms(backend, &req).map(|o| (serde_json::to_value(&o.value).unwrap(), o.transcript))
        }
        "camera_picker" => {
            let renders: Vec<ImageAttachment> = (0..5).map(|i| image(&format!("proposal{i}"))).collect();
            return match pick_camera(backend, "a cat to the left of a dog", &renders) {
                Ok(o) => Run::Parsed(serde_json::to_value(&o.value).unwrap(), o.transcript),
                Err(e) => Run::Failed(e),
            };
        }
        "subject_editor" => {
            let camera =
                CameraSpec::looking_from(Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, -1.0), 10.0, 50.0, 64, 64).unwrap();
            let subjects: Vec<EditSubject> = ids2("lamp", "table")
                .iter()
                .map(|id| EditSubject {
                    id: id.clone(),
                    description: format!("a {id}"),
                    bbox: Bbox3::new(Vec3::new(0.0, 0.5, 0.0), Vec3::splat(1.0)),
                })
                .collect();
            let req = EditRequest {
                instruction: "move the lamp 1 unit to the right",
                image: image("final"),
                camera: &camera,
                subjects: &subjects,
                scene_description: desc,
            };
            plan_edit(backend, &req).map(|o| (serde_json::to_value(&o.value).unwrap(), o.transcript))
        }
        other => panic!("unknown agent {other}"),
    };
    match result {
        Ok((v, t)) => Run::Parsed(v, t),
        Err(e) => Run::Failed(e),
    }
}

fn check_valid(agent: &str, value: &Value, transcript: &AgentTranscript, expect: &Value) -> Result<(), String> {
    if transcript.retries != 0 {
        return Err(format!("needed {} retries", transcript.retries));
    }
    match agent {
        "camera_picker" => {
            let got = value["index"].as_u64();
            if got != expect.as_u64() || value["fallback"] != Value::Bool(false) {
                return Err(format!("picked {value}, expected {expect}"));
            }
        }
        "transform_planner" | "subject_editor" => {
            let t: TransformSuggestions = serde_json::from_value(value.clone()).map_err(|e| e.to_string())?;
            transforms_match(&t, expect)?;
        }
        "bbox_planner" => {
            let (v, e) = (value.as_object().unwrap(), expect.as_object().ok_or("bad expectation")?);
            for (id, x) in e {
                let g = v.get(id).ok_or_else(|| format!("missing box {id}"))?;
                let same = ["center", "extents"].iter().all(|k| {
                    let (a, b) = (g[*k].as_array().unwrap(), x[*k].as_array().unwrap());
                    (0..3).all(|i| close(a[i].as_f64().unwrap(), b[i].as_f64().unwrap()))
                }) && g["orientation"] == x["orientation"];
                if !same {
                    return Err(format!("box {id} is {g}, expected {x}"));
                }
            }
        }
        _ => {
            if value != expect {
                return Err(format!("parsed {value}, expected {expect}"));
            }
        }
    }
    Ok(())
}

pub fn run_corpus(dir: &Path) -> Vec<CaseResult> {
    let mut out = Vec::new();
    for agent in AGENTS {
        let path = dir.join(format!("{agent}.json"));
        let doc: Value = serde_json::from_slice(&std::fs::read(&path).expect("corpus file")).expect("corpus json");
        for case in doc["cases"].as_array().expect("cases") {
            let name = case["name"].as_str().unwrap().to_string();
            let reply = case["reply"].as_str().unwrap();
            let valid = case["valid"].as_bool().unwrap();
            let backend = ScriptedBackend::new().with_rule(Rule::new(agent, reply));
            let verdict = match (valid, run_agent(agent, &backend)) {
                (true, Run::Parsed(v, t)) => check_valid(agent, &v, &t, &case["expect"]),
                (true, Run::Failed(e)) => Err(format!("failed: {e}")),
                (false, Run::Parsed(v, t)) if agent == "camera_picker" => {
                    if v["index"] == 0 && v["fallback"] == true && t.retries == 2 && t.responses.len() == 3 {
                        Ok(())
                    } else {
                        Err(format!("expected fallback after 2 retries, got {v} after {}", t.retries))
                    }
                }
                (false, Run::Parsed(v, _)) => Err(format!("invalid reply accepted as {v}")),
                (false, Run::Failed(AgentError::Parse { retries, transcript, .. })) => {
                    if retries == 2 && transcript.retries == 2 && transcript.responses.len() == 3 && transcript.parsed.is_none()
                    {
                        Ok(())
                    } else {
                        Err(format!("parse error after {retries} retries"))
                    }
                }
                (false, Run::Failed(e)) => Err(format!("wrong error: {e}")),
            };
            let expected_calls = if valid { 1 } else { 3 };
            let verdict = verdict.and_then(|()| {
                if backend.calls() == expected_calls {
                    Ok(())
                } else {
                    Err(format!("{} backend calls, expected {expected_calls}", backend.calls()))
                }
            });
            out.push(CaseResult {
                agent: agent.to_string(),
                name,
                valid,
                ok: verdict.is_ok(),
                detail: verdict.err().unwrap_or_default(),
            });
        }
    }
    out
}
