//! Agent payloads and their validation rules.

use std::collections::BTreeSet;

use scratchpad_core::{Bbox3, TransformTrs, Vec3};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectEntry {
    /// Stable slug used to key every later agent exchange.
    pub id: String,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectPlan {
    pub subjects: Vec<SubjectEntry>,
    pub background: String,
    pub enhanced_prompt: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedBox {
    pub id: String,
    pub bbox: Bbox3,
    pub target_orientation: String,
    /// The planner's box before clamping, when clamping changed it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unclamped: Option<Bbox3>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BboxPlan {
    pub boxes: Vec<PlannedBox>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformSuggestion {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl TransformSuggestion {
    pub fn delta(&self) -> TransformTrs {
        TransformTrs {
            translation: self.translation.unwrap_or_else(Vec3::zero),
            rotation: self.rotation.unwrap_or_else(Vec3::zero),
            scale: self.scale.unwrap_or(1.0),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformSuggestions {
    pub transforms: Vec<TransformSuggestion>,
}

impl TransformSuggestions {
    pub fn get(&self, id: &str) -> Option<&TransformSuggestion> {
        self.transforms.iter().find(|t| t.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraChoice {
    pub index: usize,
    /// True when the reply never produced a usable index.
    pub fallback: bool,
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, String> {
    v.get(key).ok_or_else(|| format!("missing field \"{key}\""))
}

fn text(v: &Value, key: &str) -> Result<String, String> {
    let s = field(v, key)?.as_str().ok_or_else(|| format!("\"{key}\" must be a string"))?.trim();
    if s.is_empty() {
        return Err(format!("\"{key}\" must not be empty"));
    }
    Ok(s.to_string())
}

fn array<'a>(v: &'a Value, key: &str) -> Result<&'a Vec<Value>, String> {
    field(v, key)?.as_array().ok_or_else(|| format!("\"{key}\" must be a list"))
}

fn vec3(v: &Value, what: &str) -> Result<Vec3, String> {
    let a = v.as_array().filter(|a| a.len() == 3).ok_or_else(|| format!("{what} must be a list of 3 numbers"))?;
    let mut out = [0.0; 3];
    for (o, x) in out.iter_mut().zip(a) {
        *o = x.as_f64().filter(|f| f.is_finite()).ok_or_else(|| format!("{what} must be a list of 3 numbers"))?;
    }
    Ok(Vec3::from(out))
}

fn opt_vec3(v: &Value, key: &str, what: &str) -> Result<Option<Vec3>, String> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(x) => vec3(x, what).map(Some),
    }
}

/// Lowercase ASCII slug, at most 32 characters, never empty.
pub fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    let mut out: String = out.trim_end_matches('-').chars().take(32).collect();
    while out.ends_with('-') {
        out.pop();
    }
    if out.is_empty() {
        out.push_str("subject");
    }
    out
}

pub fn validate_subject_plan(v: &Value) -> Result<SubjectPlan, String> {
    let items = array(v, "subjects")?;
    if items.is_empty() {
        return Err("\"subjects\" must list at least one subject".into());
    }
    let mut seen = BTreeSet::new();
    let mut subjects = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let description = text(item, "description").map_err(|e| format!("subjects[{i}]: {e}"))?;
        let name = match item.get("name") {
            None | Some(Value::Null) => description.clone(),
            Some(n) => n.as_str().filter(|s| !s.trim().is_empty()).map(str::to_string).ok_or_else(|| {
                format!("subjects[{i}]: \"name\" must be a non-empty string")
            })?,
        };
        let base = slug(&name);
        let mut id = base.clone();
        let mut n = 2;
        while !seen.insert(id.clone()) {
            id = format!("{base}-{n}");
            n += 1;
        }
        subjects.push(SubjectEntry { id, description });
    }
    Ok(SubjectPlan { subjects, background: text(v, "background")?, enhanced_prompt: text(v, "enhanced_prompt")? })
}

/// Matches a list of `{"id": ...}` entries one-to-one against `ids`,
/// returning them in `ids` order.
fn match_ids<'a>(items: &'a [Value], ids: &[String], list: &str) -> Result<Vec<&'a Value>, String> {
    if items.len() != ids.len() {
        return Err(format!("\"{list}\" has {} entries but there are {} subjects", items.len(), ids.len()));
    }
    let mut slots: Vec<Option<&Value>> = vec![None; ids.len()];
    for (i, item) in items.iter().enumerate() {
        let id = text(item, "id").map_err(|e| format!("{list}[{i}]: {e}"))?;
        let pos = ids.iter().position(|s| *s == id).ok_or_else(|| format!("{list}[{i}]: unknown subject id \"{id}\""))?;
        if slots[pos].replace(item).is_some() {
            return Err(format!("{list}: subject \"{id}\" appears more than once"));
        }
    }
    Ok(slots.into_iter().map(|s| s.expect("counts match and ids are unique")).collect())
}

/// Boxes in subject order, before clamping.
pub fn validate_bbox_plan(v: &Value, ids: &[String]) -> Result<BboxPlan, String> {
    let items = match_ids(array(v, "boxes")?, ids, "boxes")?;
    let mut boxes = Vec::with_capacity(items.len());
    for (id, item) in ids.iter().zip(items) {
        let center = vec3(field(item, "center")?, &format!("center of \"{id}\""))?;
        let extents = vec3(field(item, "extents")?, &format!("extents of \"{id}\""))?;
        if !(extents.x > 0.0 && extents.y > 0.0 && extents.z > 0.0) {
            return Err(format!("extents of \"{id}\" must all be positive"));
        }
        let target_orientation = text(item, "orientation").map_err(|e| format!("box \"{id}\": {e}"))?;
        boxes.push(PlannedBox { id: id.clone(), bbox: Bbox3::new(center, extents), target_orientation, unclamped: None });
    }
    Ok(BboxPlan { boxes })
}

pub fn validate_orientations(v: &Value, ids: &[String]) -> Result<Vec<String>, String> {
    let items = match_ids(array(v, "orientations")?, ids, "orientations")?;
    items.iter().map(|item| text(item, "orientation")).collect()
}

pub fn validate_transforms(v: &Value, ids: &[String]) -> Result<TransformSuggestions, String> {
    let items = array(v, "transforms")?;
    let mut seen = BTreeSet::new();
    let mut transforms = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let id = text(item, "id").map_err(|e| format!("transforms[{i}]: {e}"))?;
        if !ids.contains(&id) {
            return Err(format!("transforms[{i}]: unknown subject id \"{id}\""));
        }
        if !seen.insert(id.clone()) {
            return Err(format!("transforms: subject \"{id}\" appears more than once"));
        }
        let rotation = opt_vec3(item, "rotation", &format!("rotation of \"{id}\""))?;
        let translation = opt_vec3(item, "translation", &format!("translation of \"{id}\""))?;
        let scale = match item.get("scale") {
            None | Some(Value::Null) => None,
            Some(s) => {
                let s = s.as_f64().ok_or_else(|| format!("scale of \"{id}\" must be a number"))?;
                if !(s > 0.0 && s.is_finite()) {
                    return Err(format!("scale of \"{id}\" must be greater than 0, got {s}"));
                }
                Some(s)
            }
        };
        transforms.push(TransformSuggestion { id, rotation, translation, scale });
    }
    Ok(TransformSuggestions { transforms })
}

/// `{"view": n}` or, when the reply holds no JSON object, the last integer
/// in it.
pub fn validate_camera_reply(reply: &str, count: usize) -> Result<usize, String> {
    let check = |n: i64| {
        usize::try_from(n).ok().filter(|&n| n < count).ok_or_else(|| format!("view {n} is outside 0..={}", count - 1))
    };
    if crate::parse::json_candidates(reply).iter().any(Value::is_object) {
        return crate::parse::parse_with(reply, |v| {
            let n = v.get("view").or_else(|| v.get("index")).and_then(Value::as_i64).ok_or("missing integer \"view\"")?;
            check(n)
        });
    }
    match crate::parse::integers(reply).last() {
        Some(&n) => check(n),
        None => Err("reply contains no view index".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn subject_ids_are_unique_slugs() {
        let p = validate_subject_plan(&json!({
            "subjects": [{"name": "Red Cat", "description": "a red cat"}, {"name": "red cat", "description": "another"}, {"description": "a dog!"}],
            "background": "park", "enhanced_prompt": "two cats and a dog"
        }))
        .unwrap();
        let ids: Vec<_> = p.subjects.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["red-cat", "red-cat-2", "a-dog"]);
    }

    #[test]
    fn subject_plan_rejects_empty() {
        assert!(validate_subject_plan(&json!({"subjects": [], "background": "x", "enhanced_prompt": "y"})).is_err());
        assert!(validate_subject_plan(&json!({"subjects": [{"description": "a"}], "background": " ", "enhanced_prompt": "y"})).is_err());
    }

    #[test]
    fn boxes_reordered_by_id() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let plan = validate_bbox_plan(
            &json!({"boxes": [
                {"id": "b", "center": [1, 0.5, 0], "extents": [1, 1, 1], "orientation": "facing left"},
                {"id": "a", "center": [-2, 0.5, 0], "extents": [2, 1, 1], "orientation": "facing the camera"}
            ]}),
            &ids,
        )
        .unwrap();
        assert_eq!(plan.boxes[0].id, "a");
        assert_eq!(plan.boxes[0].bbox.center, Vec3::new(-2.0, 0.5, 0.0));
        assert!(validate_bbox_plan(&json!({"boxes": [{"id": "a", "center": [0,0,0], "extents": [1,1,1], "orientation": "x"}]}), &ids).is_err());
    }

    #[test]
    fn transforms_reject_bad_scale_and_unknown_ids() {
        let ids = vec!["cat".to_string()];
        assert!(validate_transforms(&json!({"transforms": [{"id": "cat", "scale": -1}]}), &ids).is_err());
        assert!(validate_transforms(&json!({"transforms": [{"id": "dog"}]}), &ids).is_err());
        assert!(validate_transforms(&json!({"transforms": [{"id": "cat"}, {"id": "cat"}]}), &ids).is_err());
        let ok = validate_transforms(&json!({"transforms": [{"id": "cat", "rotation": [0, 90, 0]}]}), &ids).unwrap();
        assert_eq!(ok.transforms[0].delta().rotation, Vec3::new(0.0, 90.0, 0.0));
        assert_eq!(ok.transforms[0].delta().scale, 1.0);
    }

    #[test]
    fn camera_reply_forms() {
        assert_eq!(validate_camera_reply("2", 5), Ok(2));
        assert_eq!(validate_camera_reply("the top view, i.e. 4", 5), Ok(4));
        assert_eq!(validate_camera_reply("```json\n{\"view\": 3}\n```", 5), Ok(3));
        assert!(validate_camera_reply("5", 5).is_err());
        assert!(validate_camera_reply("front", 5).is_err());
        assert!(validate_camera_reply("{\"view\": \"one\"}", 5).is_err());
    }
}
