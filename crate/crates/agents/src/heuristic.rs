//! Offline rule-based stand-in for a chat model. It reads the JSON inputs
//! block of each request and answers the way a cooperative planner would,
//! which lets the whole pipeline run without network access.

use scratchpad_core::{CameraSpec, Vec3, WorkspaceBounds};
use serde_json::{json, Value};

use crate::chat::{ChatBackend, ChatError, ChatRequest, ImageAttachment};
use crate::parse::fenced_blocks;
use crate::relations::{find_word, parse_relations, Relation};
use crate::schema::slug;
use crate::templates;

#[derive(Clone, Debug, Default)]
pub struct HeuristicBackend;

impl HeuristicBackend {
    pub fn new() -> Self {
        Self
    }
}

impl ChatBackend for HeuristicBackend {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn send(&self, request: &ChatRequest) -> Result<String, ChatError> {
        let inputs = fenced_blocks(request.first_user_text())
            .first()
            .and_then(|b| serde_json::from_str::<Value>(b).ok())
            .unwrap_or(Value::Null);
        let system = request.messages.first().map_or("", |m| m.text.as_str());
        let images: Vec<&ImageAttachment> = request.messages.iter().flat_map(|m| m.images.iter()).collect();
        let body = match request.agent.as_str() {
            a if a == templates::SUBJECT_EXTRACTOR.agent => extract(&inputs),
            a if a == templates::BBOX_PLANNER.agent => plan_boxes(&inputs, bounds_from_description(system)),
            a if a == templates::ORIENTATION_ESTIMATOR.agent => estimate(&inputs, &images),
            a if a == templates::TRANSFORM_PLANNER.agent => transforms(&inputs),
            a if a == templates::CAMERA_PICKER.agent => {
                return Ok(format!("{{\"view\": {}}}", pick_view(inputs["prompt"].as_str().unwrap_or(""))))
            }
            a if a == templates::SUBJECT_EDITOR.agent => edit(&inputs),
            other => {
                return Err(ChatError::Unavailable {
                    backend: self.name().into(),
                    message: format!("no rules for agent {other}"),
                })
            }
        };
        Ok(format!("```json\n{}\n```", serde_json::to_string_pretty(&body).expect("reply serializes")))
    }
}

const ARTICLES: [&str; 6] = ["a", "an", "the", "one", "some", "single"];
const COUNTS: [(&str, usize); 8] =
    [("two", 2), ("three", 3), ("four", 4), ("five", 5), ("2", 2), ("3", 3), ("4", 4), ("5", 5)];
const SPLITTERS: [&str; 21] = [
    " to the left of ", " to the right of ", " on the left of ", " on the right of ", " left of ", " right of ",
    " in front of ", " in back of ", " behind ", " on top of ", " next to ", " beside ", " above ", " below ",
    " under ", " beneath ", " sitting on ", " on ", " and ", ", ", " with ",
];
const SETTINGS: [&str; 6] = [" in a ", " in an ", " in the ", " at a ", " at the ", " at an "];
const MAX_SUBJECTS: usize = 8;

/// Splits a prompt into subject phrases and a background.
pub fn split_prompt(prompt: &str) -> (Vec<(String, String)>, String) {
    let mut text = format!(" {} ", prompt.trim().trim_end_matches(['.', '!', '?']).to_lowercase());
    let mut background = String::from("plain neutral background");
    if let Some((pos, pat)) = SETTINGS.iter().filter_map(|p| text.rfind(p).map(|i| (i, *p))).max_by_key(|(i, _)| *i) {
        background = text[pos + pat.len() - 2..].trim().to_string();
        text.truncate(pos + 1);
    }
    let mut marked = text.clone();
    for s in SPLITTERS {
        marked = marked.replace(s, " | ");
    }
    let mut subjects = Vec::new();
    for phrase in marked.split('|') {
        let mut words: Vec<&str> = phrase.split_whitespace().collect();
        let mut count = 1;
        while let Some(first) = words.first() {
            if let Some((_, n)) = COUNTS.iter().find(|(w, _)| w == first) {
                count = *n;
                words.remove(0);
            } else if ARTICLES.contains(first) {
                words.remove(0);
            } else {
                break;
            }
        }
        // drop trailing clauses such as "sitting" or "facing left"
        if let Some(cut) = words.iter().position(|w| w.ends_with("ing") && w.len() > 4) {
            if cut > 0 {
                words.truncate(cut);
            }
        }
        let Some(last) = words.last() else { continue };
        let mut name = last.trim_matches(|c: char| !c.is_alphanumeric()).to_string();
        if count > 1 && name.len() > 3 && name.ends_with('s') {
            name.pop();
            let n = words.len();
            words[n - 1] = &name;
        }
        if name.is_empty() {
            continue;
        }
        let description = format!("a {}", words.join(" "));
        for _ in 0..count {
            subjects.push((name.clone(), description.clone()));
        }
    }
    subjects.truncate(MAX_SUBJECTS);
    if subjects.is_empty() {
        let p = prompt.trim().to_string();
        subjects.push((p.split_whitespace().last().unwrap_or("subject").to_lowercase(), p));
    }
    (subjects, background)
}

fn extract(inputs: &Value) -> Value {
    let prompt = inputs["prompt"].as_str().unwrap_or("").trim();
    let (subjects, background) = split_prompt(prompt);
    let mut enhanced = prompt.to_string();
    if let Some(c) = enhanced.get(0..1) {
        enhanced = c.to_uppercase() + &enhanced[1..];
    }
    let enhanced = format!("{}. A coherent, well lit photograph.", enhanced.trim_end_matches('.'));
    json!({
        "subjects": subjects.iter().map(|(n, d)| json!({"name": n, "description": d})).collect::<Vec<_>>(),
        "background": background,
        "enhanced_prompt": enhanced,
    })
}

/// Reads "x in [a, b], y in [0, c], z in [d, e]" back out of the scene
/// description; defaults when absent.
pub fn bounds_from_description(d: &str) -> WorkspaceBounds {
    let mut b = WorkspaceBounds::default();
    for (axis, slot) in [("x in [", 0), ("y in [", 1), ("z in [", 2)] {
        let Some(pos) = d.find(axis) else { continue };
        let rest = &d[pos + axis.len()..];
        let Some(end) = rest.find(']') else { continue };
        let nums: Vec<f64> = rest[..end].split(',').filter_map(|s| s.trim().parse().ok()).collect();
        if let [lo, hi] = nums[..] {
            match slot {
                0 => b.x_half = hi.max(-lo),
                1 => b.y_max = hi,
                _ => b.z_half = hi.max(-lo),
            }
        }
    }
    b
}

/// Rough real-world size (largest dimension, meters) for common nouns.
fn typical_size(description: &str) -> f64 {
    const SMALL: [&str; 12] =
        ["cup", "mug", "apple", "orange", "ball", "bottle", "book", "phone", "vase", "candle", "bowl", "shoe"];
    const LARGE: [&str; 10] = ["tree", "house", "tower", "car", "elephant", "horse", "bus", "truck", "building", "giraffe"];
    let d = description.to_lowercase();
    if SMALL.iter().any(|w| find_word(&d, w).is_some()) {
        0.6
    } else if LARGE.iter().any(|w| find_word(&d, w).is_some()) {
        3.0
    } else {
        1.2
    }
}

fn target_orientation(description: &str) -> &'static str {
    let d = description.to_lowercase();
    if d.contains("lying") {
        "lying flat"
    } else if d.contains("facing left") {
        "facing left"
    } else if d.contains("facing right") {
        "facing right"
    } else if d.contains("facing away") || d.contains("from behind") {
        "facing away"
    } else {
        "facing the camera"
    }
}

fn vec3_of(v: &Value) -> Option<Vec3> {
    let a = v.as_array()?;
    Some(Vec3::new(a.first()?.as_f64()?, a.get(1)?.as_f64()?, a.get(2)?.as_f64()?))
}

fn plan_boxes(inputs: &Value, bounds: WorkspaceBounds) -> Value {
    let empty = Vec::new();
    let subjects = inputs["subjects"].as_array().unwrap_or(&empty);
    let prompt = inputs["enhanced_prompt"].as_str().unwrap_or("");
    let n = subjects.len();
    let mut extents: Vec<Vec3> = subjects
        .iter()
        .map(|s| {
            let ar = vec3_of(&s["aspect_ratio"]).unwrap_or(Vec3::splat(1.0));
            let e = ar * typical_size(s["description"].as_str().unwrap_or(""));
            e.map(|c| c.max(0.05))
        })
        .collect();
    // keep the row inside the workspace width
    let row: f64 = extents.iter().map(|e| e.x + 0.4).sum();
    if row > 2.0 * bounds.x_half {
        let k = 2.0 * bounds.x_half / row;
        for e in &mut extents {
            *e = *e * k;
        }
    }
    // image left is +X under the front camera, so mention order runs +X to -X
    let mut x = vec![0.0; n];
    let total: f64 = extents.iter().map(|e| e.x + 0.4).sum();
    let mut cursor = total / 2.0;
    for i in 0..n {
        let w = extents[i].x + 0.4;
        x[i] = cursor - w / 2.0;
        cursor -= w;
    }
    let mut z = vec![0.0; n];
    let mut base = vec![0.0; n];
    let names: Vec<String> = subjects
        .iter()
        .map(|s| {
            let id = s["id"].as_str().unwrap_or("");
            let stem = id.rsplit_once('-').filter(|(_, t)| t.parse::<u32>().is_ok()).map_or(id, |(h, _)| h);
            stem.rsplit('-').next().unwrap_or(stem).to_string()
        })
        .collect();
    for r in parse_relations(prompt, &names) {
        let (a, b) = (r.a, r.b);
        match r.relation {
            // image left is +X
            Relation::LeftOf if x[a] <= x[b] => x.swap(a, b),
            Relation::RightOf if x[a] >= x[b] => x.swap(a, b),
            Relation::Above => {
                x[a] = x[b];
                z[a] = z[b];
                base[a] = base[b] + extents[b].y;
            }
            Relation::Below => {
                x[b] = x[a];
                z[b] = z[a];
                base[b] = base[a] + extents[a].y;
            }
            Relation::InFrontOf => {
                z[a] = z[b] - (extents[a].z + extents[b].z) / 2.0 - 0.5;
            }
            Relation::Behind => {
                z[a] = z[b] + (extents[a].z + extents[b].z) / 2.0 + 0.5;
            }
            Relation::LeftOf | Relation::RightOf | Relation::NextTo => {}
        }
    }
    let boxes: Vec<Value> = subjects
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let e = extents[i];
            json!({
                "id": s["id"],
                "center": [round3(x[i]), round3(base[i] + e.y / 2.0), round3(z[i])],
                "extents": [round3(e.x), round3(e.y), round3(e.z)],
                "orientation": target_orientation(s["description"].as_str().unwrap_or("")),
            })
        })
        .collect();
    json!({ "boxes": boxes })
}

fn round3(v: f64) -> f64 {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Horizontal skew of the foreground in a crop: negative when the mass sits
/// left of center. Foreground is anything unlike the corner pixels.
pub fn foreground_skew(png: &[u8]) -> Option<f64> {
    let img = image::load_from_memory(png).ok()?.to_rgb8();
    let (w, h) = img.dimensions();
    if w < 3 || h < 3 {
        return None;
    }
    let corners = [img.get_pixel(0, 0), img.get_pixel(w - 1, 0), img.get_pixel(0, h - 1), img.get_pixel(w - 1, h - 1)];
    let (mut sum, mut count) = (0.0, 0u64);
    for (x, _, p) in img.enumerate_pixels() {
        let bg = corners.iter().any(|c| c.0.iter().zip(p.0).all(|(a, b)| a.abs_diff(b) <= 8));
        if !bg {
            sum += x as f64 + 0.5;
            count += 1;
        }
    }
    (count > 0).then(|| (sum / count as f64 - w as f64 / 2.0) / w as f64)
}

fn estimate(inputs: &Value, images: &[&ImageAttachment]) -> Value {
    let empty = Vec::new();
    let subjects = inputs["subjects"].as_array().unwrap_or(&empty);
    let out: Vec<Value> = subjects
        .iter()
        .map(|s| {
            let label = s["crop"].as_str().unwrap_or("");
            let skew = images
                .iter()
                .find(|i| i.label == label)
                .and_then(|i| i.png.as_ref())
                .and_then(|png| foreground_skew(png))
                .unwrap_or(0.0);
            let o = if skew < -0.08 {
                "facing left"
            } else if skew > 0.08 {
                "facing right"
            } else {
                "facing the camera"
            };
            json!({"id": s["id"], "orientation": o})
        })
        .collect();
    json!({ "orientations": out })
}

/// Yaw (degrees about +Y) that turns a camera-facing subject to face the
/// described way, or `None` for orientations that are not yaw-only.
pub fn facing_yaw(orientation: &str) -> Option<f64> {
    let o = orientation.to_lowercase();
    if o.contains("lying") || o.contains("upside") || o.contains("flat") {
        None
    } else if o.contains("away") || o.contains("back to") || o.contains("backward") {
        Some(180.0)
    } else if o.contains("left") {
        Some(-90.0)
    } else if o.contains("right") {
        Some(90.0)
    } else if ["camera", "viewer", "front", "forward", "toward"].iter().any(|w| o.contains(w)) {
        Some(0.0)
    } else {
        None
    }
}

fn transforms(inputs: &Value) -> Value {
    let empty = Vec::new();
    let mut out = Vec::new();
    for s in inputs["subjects"].as_array().unwrap_or(&empty) {
        let est = facing_yaw(s["estimated_orientation"].as_str().unwrap_or(""));
        let tgt = facing_yaw(s["target_orientation"].as_str().unwrap_or(""));
        if let (Some(e), Some(t)) = (est, tgt) {
            let d = scratchpad_core::transform::normalize_degrees(t - e);
            if d != 0.0 {
                out.push(json!({"id": s["id"], "rotation": [0.0, d, 0.0]}));
            }
        }
    }
    json!({ "transforms": out })
}

/// Proposal order: front, partial right, partial left, partial top, top.
pub fn pick_view(prompt: &str) -> usize {
    let p = prompt.to_lowercase();
    let has = |ws: &[&str]| ws.iter().any(|w| p.contains(w));
    if has(&["top view", "top-down", "top down", "from above", "overhead", "bird's-eye", "birds-eye", "bird's eye"]) {
        4
    } else if has(&["high angle", "looking down", "elevated view", "from slightly above"]) {
        3
    } else if has(&["from the left", "left side view"]) {
        2
    } else if has(&["from the right", "right side view"]) {
        1
    } else {
        0
    }
}

fn number_words(text: &str) -> Option<f64> {
    const WORDS: [(&str, f64); 6] = [("half", 0.5), ("one", 1.0), ("two", 2.0), ("three", 3.0), ("four", 4.0), ("five", 5.0)];
    WORDS.iter().find(|(w, _)| find_word(text, w).is_some()).map(|(_, v)| *v)
}

/// First decimal number in `text`.
fn first_number(text: &str) -> Option<f64> {
    let mut cur = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_digit() || (c == '.' && !cur.is_empty()) {
            cur.push(c);
        } else if !cur.is_empty() {
            if let Ok(v) = cur.trim_end_matches('.').parse() {
                return Some(v);
            }
            cur.clear();
        }
    }
    None
}

fn edit(inputs: &Value) -> Value {
    let instruction = inputs["instruction"].as_str().unwrap_or("").to_lowercase();
    let empty = Vec::new();
    let subjects = inputs["subjects"].as_array().unwrap_or(&empty);
    let mut best: Option<(usize, String)> = None;
    for s in subjects {
        let id = s["id"].as_str().unwrap_or("").to_string();
        let mut keys = vec![id.replace('-', " ")];
        if let Some(last) = s["description"].as_str().and_then(|d| d.split_whitespace().last()) {
            keys.push(last.to_lowercase());
        }
        if let Some(stem) = id.rsplit('-').find(|t| t.parse::<u32>().is_err()) {
            keys.push(stem.to_string());
        }
        if let Some(pos) = keys.iter().filter_map(|k| find_word(&instruction, k)).min() {
            if best.as_ref().is_none_or(|(p, _)| pos < *p) {
                best = Some((pos, id));
            }
        }
    }
    let id = match best {
        Some((_, id)) => id,
        None => {
            // name whatever noun follows "the"; validation rejects it
            let guess = instruction.split("the ").nth(1).and_then(|r| r.split_whitespace().next()).unwrap_or("it");
            slug(guess)
        }
    };
    let camera = &inputs["camera"];
    let basis = serde_json::from_value::<CameraSpec>(camera["spec"].clone()).ok().map(|c| c.basis());
    let right = basis.map_or(Vec3::new(-1.0, 0.0, 0.0), |b| b.right);
    let forward = basis.map_or(Vec3::new(0.0, 0.0, 1.0), |b| b.forward);
    let has = |ws: &[&str]| ws.iter().any(|w| find_word(&instruction, w).is_some());
    let amount = first_number(&instruction).or_else(|| number_words(&instruction)).unwrap_or(1.0);
    let mut entry = json!({ "id": id });
    if has(&["bigger", "larger", "as big", "as large", "smaller", "scale", "double", "twice", "half", "shrink", "enlarge"]) {
        let scale = if has(&["twice", "double"]) {
            2.0
        } else if has(&["half", "halve"]) {
            0.5
        } else if let Some(n) = first_number(&instruction) {
            n
        } else if has(&["smaller", "shrink"]) {
            0.75
        } else {
            1.5
        };
        entry["scale"] = json!(scale);
    } else if has(&["rotate", "turn", "spin"]) {
        let deg = if instruction.contains("around") && first_number(&instruction).is_none() {
            180.0
        } else {
            first_number(&instruction).unwrap_or(90.0)
        };
        let sign = if instruction.contains("counterclockwise") || instruction.contains("anticlockwise") { -1.0 } else { 1.0 };
        entry["rotation"] = json!([0.0, sign * deg, 0.0]);
    } else {
        let axis_word = [("+x", Vec3::unit_x()), ("-x", -Vec3::unit_x()), ("+z", Vec3::unit_z()), ("-z", -Vec3::unit_z())]
            .into_iter()
            .find(|(w, _)| instruction.contains(w))
            .map(|(_, v)| v);
        let dir = if let Some(v) = axis_word {
            v
        } else if has(&["left"]) {
            -right
        } else if has(&["right"]) {
            right
        } else if has(&["up", "higher", "raise", "lift"]) {
            Vec3::unit_y()
        } else if has(&["down", "lower"]) {
            -Vec3::unit_y()
        } else if has(&["closer", "nearer", "forward", "toward the camera", "towards the camera"]) {
            -forward
        } else if has(&["farther", "further", "away", "back", "backward"]) {
            forward
        } else {
            Vec3::zero()
        };
        let t = (dir * amount).map(round3);
        entry["translation"] = json!([t.x, t.y, t.z]);
    }
    json!({ "transforms": [entry] })
}
