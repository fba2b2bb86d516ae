//! Pairwise spatial relations between subjects: read from prompt text and
//! checked against planned boxes as seen by the front camera.

use scratchpad_core::{Bbox3, CameraSpec, Vec3, WorkspaceBounds};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    LeftOf,
    RightOf,
    Above,
    Below,
    InFrontOf,
    Behind,
    NextTo,
}

/// Phrases tried in order; earlier entries shadow later substrings.
const PHRASES: [(&str, Relation); 19] = [
    ("to the left of", Relation::LeftOf),
    ("on the left of", Relation::LeftOf),
    ("left of", Relation::LeftOf),
    ("to the right of", Relation::RightOf),
    ("on the right of", Relation::RightOf),
    ("right of", Relation::RightOf),
    ("in front of", Relation::InFrontOf),
    ("behind", Relation::Behind),
    ("in back of", Relation::Behind),
    ("on top of", Relation::Above),
    ("above", Relation::Above),
    ("over", Relation::Above),
    ("sitting on", Relation::Above),
    ("on", Relation::Above),
    ("under", Relation::Below),
    ("below", Relation::Below),
    ("beneath", Relation::Below),
    ("next to", Relation::NextTo),
    ("beside", Relation::NextTo),
];

impl Relation {
    pub fn inverse(self) -> Relation {
        match self {
            Relation::LeftOf => Relation::RightOf,
            Relation::RightOf => Relation::LeftOf,
            Relation::Above => Relation::Below,
            Relation::Below => Relation::Above,
            Relation::InFrontOf => Relation::Behind,
            Relation::Behind => Relation::InFrontOf,
            Relation::NextTo => Relation::NextTo,
        }
    }

    /// Relation named in a stretch of text between two subject mentions.
    pub fn find_in(text: &str) -> Option<Relation> {
        let padded = format!(" {} ", text.to_lowercase());
        PHRASES.iter().find(|(p, _)| padded.contains(&format!(" {p} "))).map(|(_, r)| *r)
    }
}

/// `a` relation `b`, as subject positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTriple {
    pub a: usize,
    pub relation: Relation,
    pub b: usize,
}

/// Byte offset of the first whole-word occurrence of `word` in `text`.
pub fn find_word(text: &str, word: &str) -> Option<usize> {
    if word.is_empty() {
        return None;
    }
    let bytes = text.as_bytes();
    let mut from = 0;
    while let Some(pos) = text[from..].find(word) {
        let start = from + pos;
        let end = start + word.len();
        let before_ok = start == 0 || !bytes[start - 1].is_ascii_alphanumeric();
        // allow a plural "s"
        let after_ok = end == bytes.len()
            || !bytes[end].is_ascii_alphanumeric()
            || (bytes[end] == b's' && (end + 1 == bytes.len() || !bytes[end + 1].is_ascii_alphanumeric()));
        if before_ok && after_ok {
            return Some(start);
        }
        from = start + 1;
    }
    None
}

/// Relations between consecutively mentioned subjects. `names[i]` is the
/// word that identifies subject `i` in the prompt. Subjects sharing a name
/// claim its first occurrences in order; later occurrences refer back to the
/// first of them.
pub fn parse_relations(prompt: &str, names: &[String]) -> Vec<RelationTriple> {
    let lower = prompt.to_lowercase();
    let mut mentions: Vec<(usize, usize, usize)> = Vec::new();
    let mut done: Vec<String> = Vec::new();
    for name in names {
        let name = name.to_lowercase();
        if done.contains(&name) {
            continue;
        }
        let owners: Vec<usize> = (0..names.len()).filter(|&i| names[i].to_lowercase() == name).collect();
        let mut from = 0;
        let mut k = 0;
        while let Some(pos) = find_word(&lower[from..], &name) {
            let start = from + pos;
            let mut end = start + name.len();
            if lower.as_bytes().get(end) == Some(&b's') {
                end += 1;
            }
            let owner = owners.get(k).copied().unwrap_or(owners[0]);
            mentions.push((start, end, owner));
            k += 1;
            from = end;
        }
        done.push(name);
    }
    mentions.sort();
    let mut out: Vec<RelationTriple> = Vec::new();
    for w in mentions.windows(2) {
        let (_, end_a, a) = w[0];
        let (start_b, _, b) = w[1];
        if a == b || start_b < end_a {
            continue;
        }
        if let Some(relation) = Relation::find_in(&lower[end_a..start_b]) {
            let t = RelationTriple { a, relation, b };
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

/// Camera used to judge left/right and front/back for a workspace.
pub fn reference_camera(bounds: &WorkspaceBounds) -> CameraSpec {
    let center = Vec3::new(0.0, bounds.y_max / 2.0, 0.0);
    let distance = 3.0 * bounds.x_half.max(bounds.z_half).max(bounds.y_max);
    CameraSpec::looking_from(center, Vec3::new(0.0, 0.0, -1.0), distance, 50.0, 1024, 1024)
        .expect("fixed reference camera is valid")
}

/// Whether `a relation b` holds for the two boxes seen through `camera`.
/// Left/right compare projected image columns, front/behind compare depth.
pub fn relation_holds(relation: Relation, a: &Bbox3, b: &Bbox3, camera: &CameraSpec) -> bool {
    let basis = camera.basis();
    let (ca, cb) = (basis.to_camera(a.center), basis.to_camera(b.center));
    let column = |c: Vec3| c.x / c.z;
    match relation {
        Relation::LeftOf => ca.z > 0.0 && cb.z > 0.0 && column(ca) < column(cb),
        Relation::RightOf => ca.z > 0.0 && cb.z > 0.0 && column(ca) > column(cb),
        Relation::InFrontOf => ca.z < cb.z,
        Relation::Behind => ca.z > cb.z,
        Relation::Above => a.center.y > b.center.y,
        Relation::Below => a.center.y < b.center.y,
        Relation::NextTo => {
            let reach = a.extents.max_component().max(b.extents.max_component()) * 2.0;
            let d = a.center - b.center;
            (d.x * d.x + d.z * d.z).sqrt() <= reach
        }
    }
}
