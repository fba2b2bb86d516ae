//! The scratchpad: a bounded workspace holding subjects.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::SceneError;
use crate::{Aabb, Bbox3, TransformTrs, TriMesh, Vec3};

pub const SCENE_SCHEMA_VERSION: u32 = 1;

/// Direction the scene's directional light travels (not normalized).
pub const LIGHT_DIRECTION: [f64; 3] = [-0.3, -1.0, -0.4];
pub const AMBIENT: f64 = 0.35;

/// Workspace extent. The ground plane is always `y = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBounds {
    pub x_half: f64,
    pub z_half: f64,
    pub y_max: f64,
}

impl Default for WorkspaceBounds {
    fn default() -> Self {
        Self { x_half: 5.0, z_half: 5.0, y_max: 5.0 }
    }
}

impl WorkspaceBounds {
    pub fn aabb(&self) -> Aabb {
        Aabb {
            min: Vec3::new(-self.x_half, 0.0, -self.z_half),
            max: Vec3::new(self.x_half, self.y_max, self.z_half),
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.x_half, self.z_half, self.y_max].iter().all(|v| v.is_finite() && *v > 0.0)
    }

    /// Shrinks and shifts `b` until it fits. Returns `None` when unchanged.
    pub fn clamp_bbox(&self, b: &Bbox3) -> Option<Bbox3> {
        let ws = self.aabb();
        let mut center = b.center;
        let mut extents = b.extents;
        for axis in 0..3 {
            let (lo, hi) = (ws.min[axis], ws.max[axis]);
            let e = extents[axis].min(hi - lo);
            let c = center[axis].max(lo + e / 2.0).min(hi - e / 2.0);
            set_axis(&mut extents, axis, e);
            set_axis(&mut center, axis, c);
        }
        let clamped = Bbox3::new(center, extents);
        (clamped != *b).then_some(clamped)
    }
}

fn set_axis(v: &mut Vec3, axis: usize, value: f64) {
    match axis {
        0 => v.x = value,
        1 => v.y = value,
        _ => v.z = value,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PaletteColor {
    pub name: &'static str,
    pub rgb: [u8; 3],
}

/// Fixed subject colors, assigned by creation index modulo 10.
pub const PALETTE: [PaletteColor; 10] = [
    PaletteColor { name: "red", rgb: [230, 25, 75] },
    PaletteColor { name: "green", rgb: [60, 180, 75] },
    PaletteColor { name: "yellow", rgb: [255, 225, 25] },
    PaletteColor { name: "blue", rgb: [0, 130, 200] },
    PaletteColor { name: "orange", rgb: [245, 130, 48] },
    PaletteColor { name: "purple", rgb: [145, 30, 180] },
    PaletteColor { name: "cyan", rgb: [70, 240, 240] },
    PaletteColor { name: "magenta", rgb: [240, 50, 230] },
    PaletteColor { name: "lime", rgb: [210, 245, 60] },
    PaletteColor { name: "pink", rgb: [250, 190, 212] },
];

pub fn palette_color(index: usize) -> PaletteColor {
    PALETTE[index % PALETTE.len()]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subject {
    pub id: String,
    pub index: usize,
    pub prompt: String,
    pub identity_image_ref: Option<String>,
    pub mesh: Option<TriMesh>,
    pub color: PaletteColor,
    pub planned_bbox: Option<Bbox3>,
    pub transform: TransformTrs,
    pub target_orientation: Option<String>,
    pub estimated_orientation: Option<String>,
}

impl Subject {
    pub fn new(id: impl Into<String>, index: usize, prompt: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            index,
            prompt: prompt.into(),
            identity_image_ref: None,
            mesh: None,
            color: palette_color(index),
            planned_bbox: None,
            transform: TransformTrs::identity(),
            target_orientation: None,
            estimated_orientation: None,
        }
    }

    /// World-space bounds of the transformed mesh.
    pub fn world_aabb(&self) -> Option<Aabb> {
        self.mesh.as_ref().map(|m| crate::compute_aabb(m, &self.transform))
    }

    pub fn world_mesh(&self) -> Option<TriMesh> {
        self.mesh.as_ref().map(|m| m.transformed(&self.transform))
    }
}

/// Immutable scene value; every edit returns a new scene.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub bounds: WorkspaceBounds,
    pub subjects: Vec<Subject>,
    pub background_prompt: String,
    pub enhanced_prompt: String,
}

impl Default for Scene {
    fn default() -> Self {
        Self::new(WorkspaceBounds::default())
    }
}

impl Scene {
    pub fn new(bounds: WorkspaceBounds) -> Self {
        Self { bounds, subjects: Vec::new(), background_prompt: String::new(), enhanced_prompt: String::new() }
    }

    pub fn light_direction(&self) -> Vec3 {
        Vec3::from(LIGHT_DIRECTION).normalized().expect("non-zero light")
    }

    pub fn ambient(&self) -> f64 {
        AMBIENT
    }

    pub fn subject(&self, id: &str) -> Result<&Subject, SceneError> {
        self.subjects.iter().find(|s| s.id == id).ok_or_else(|| SceneError::UnknownSubject(id.into()))
    }

    pub fn subject_position(&self, id: &str) -> Result<usize, SceneError> {
        self.subjects.iter().position(|s| s.id == id).ok_or_else(|| SceneError::UnknownSubject(id.into()))
    }

    /// Appends a subject with the next index and its palette color.
    pub fn with_subject(&self, id: impl Into<String>, prompt: impl Into<String>) -> Result<Scene, SceneError> {
        let id = id.into();
        if self.subjects.iter().any(|s| s.id == id) {
            return Err(SceneError::DuplicateSubject(id));
        }
        let mut next = self.clone();
        next.subjects.push(Subject::new(id, self.subjects.len(), prompt));
        Ok(next)
    }

    /// Returns a copy with `f` applied to one subject.
    pub fn map_subject(
        &self,
        id: &str,
        f: impl FnOnce(&mut Subject) -> Result<(), SceneError>,
    ) -> Result<Scene, SceneError> {
        let pos = self.subject_position(id)?;
        let mut next = self.clone();
        f(&mut next.subjects[pos])?;
        Ok(next)
    }

    /// Composes `delta` into a subject's transform. Rotation and scale act
    /// about the center of the subject's current world bounds; translation
    /// is added afterwards. No re-grounding is performed.
    pub fn transform_subject(&self, id: &str, delta: &TransformTrs) -> Result<Scene, SceneError> {
        if !delta.is_valid() {
            return Err(SceneError::InvalidTransform(format!(
                "delta scale must be positive and finite (got {})",
                delta.scale
            )));
        }
        let subject = self.subject(id)?;
        let pivot = subject.world_aabb().ok_or_else(|| SceneError::MissingMesh(id.into()))?.center();
        if delta.is_identity() {
            return Ok(self.clone());
        }
        self.map_subject(id, |s| {
            s.transform = s.transform.compose_about(delta, pivot);
            Ok(())
        })
    }

    /// Errors if the subject's transformed mesh leaves the workspace.
    pub fn check_subject_in_bounds(&self, id: &str) -> Result<(), SceneError> {
        let s = self.subject(id)?;
        if let Some(b) = s.world_aabb() {
            if !self.bounds.aabb().contains(&b, 1e-9) {
                return Err(SceneError::OutOfBounds {
                    subject: id.into(),
                    what: "mesh",
                    detail: describe_overflow(&self.bounds, &b),
                });
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !self.bounds.is_valid() {
            return Err(SceneError::Invalid("workspace bounds must be positive".into()));
        }
        let mut seen = HashSet::new();
        for (i, s) in self.subjects.iter().enumerate() {
            if !seen.insert(s.id.as_str()) {
                return Err(SceneError::DuplicateSubject(s.id.clone()));
            }
            if s.index != i {
                return Err(SceneError::Invalid(format!("subject {:?} has index {} at position {i}", s.id, s.index)));
            }
            if s.color != palette_color(s.index) {
                return Err(SceneError::Invalid(format!("subject {:?} does not carry its palette color", s.id)));
            }
            if !s.transform.is_valid() {
                return Err(SceneError::InvalidTransform(format!("subject {:?}", s.id)));
            }
            if let Some(m) = &s.mesh {
                m.validate()?;
            }
            if let Some(b) = &s.planned_bbox {
                if !b.is_valid() {
                    return Err(SceneError::Invalid(format!("subject {:?} has a degenerate bbox", s.id)));
                }
                if !self.bounds.aabb().contains(&b.aabb(), 1e-9) {
                    return Err(SceneError::OutOfBounds {
                        subject: s.id.clone(),
                        what: "planned bbox",
                        detail: describe_overflow(&self.bounds, &b.aabb()),
                    });
                }
            }
        }
        Ok(())
    }
}

fn describe_overflow(bounds: &WorkspaceBounds, b: &Aabb) -> String {
    let ws = bounds.aabb();
    let mut parts = Vec::new();
    for (axis, name) in ["x", "y", "z"].iter().enumerate() {
        if b.min[axis] < ws.min[axis] - 1e-9 || b.max[axis] > ws.max[axis] + 1e-9 {
            parts.push(format!(
                "{name} spans [{:.4}, {:.4}] but bounds are [{}, {}]",
                b.min[axis], b.max[axis], ws.min[axis], ws.max[axis]
            ));
        }
    }
    parts.join("; ")
}

/// Text handed to every planning agent describing the workspace.
pub fn scene_description(scene: &Scene) -> String {
    let b = &scene.bounds;
    let mut d = String::new();
    let _ = writeln!(d, "Coordinate system: right-handed, +Y points up, ground plane at y=0. One unit is about one meter.");
    let _ = writeln!(
        d,
        "Workspace bounds: x in [{}, {}], y in [0, {}], z in [{}, {}]. Every subject must stay inside these bounds.",
        -b.x_half, b.x_half, b.y_max, -b.z_half, b.z_half
    );
    let _ = writeln!(
        d,
        "Front camera: positioned on the -Z side of the scene looking toward +Z with +Y up. \
         In the front view +X appears on the left of the image, -X on the right, and larger z is farther from the viewer."
    );
    let _ = writeln!(d, "Renders show a gray ground plane and rulers marked every 1 unit along the X, Y and Z axes.");
    if !scene.subjects.is_empty() {
        let _ = writeln!(d, "Subjects are drawn in fixed colors:");
        for s in &scene.subjects {
            let _ = writeln!(d, "- subject {} ({}): {} is {}", s.index, s.id, s.prompt, s.color.name);
        }
    }
    d
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    schema_version: u32,
    bounds: WorkspaceBounds,
    background_prompt: String,
    enhanced_prompt: String,
    subjects: Vec<SubjectDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubjectDoc {
    id: String,
    index: usize,
    prompt: String,
    color: ColorDoc,
    identity_image_ref: Option<String>,
    planned_bbox: Option<Bbox3>,
    transform: TransformTrs,
    target_orientation: Option<String>,
    estimated_orientation: Option<String>,
    mesh: Option<TriMesh>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColorDoc {
    name: String,
    rgb: [u8; 3],
}

/// Canonical JSON: fixed key order, two-space indent, trailing newline.
pub fn serialize_scene(scene: &Scene) -> Vec<u8> {
    let doc = SceneDoc {
        schema_version: SCENE_SCHEMA_VERSION,
        bounds: scene.bounds,
        background_prompt: scene.background_prompt.clone(),
        enhanced_prompt: scene.enhanced_prompt.clone(),
        subjects: scene
            .subjects
            .iter()
            .map(|s| SubjectDoc {
                id: s.id.clone(),
                index: s.index,
                prompt: s.prompt.clone(),
                color: ColorDoc { name: s.color.name.to_string(), rgb: s.color.rgb },
                identity_image_ref: s.identity_image_ref.clone(),
                planned_bbox: s.planned_bbox,
                transform: s.transform,
                target_orientation: s.target_orientation.clone(),
                estimated_orientation: s.estimated_orientation.clone(),
                mesh: s.mesh.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("scene serializes");
    out.push(b'\n');
    out
}

pub fn deserialize_scene(bytes: &[u8]) -> Result<Scene, SceneError> {
    let probe: serde_json::Value = serde_json::from_slice(bytes)?;
    let version = probe.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != SCENE_SCHEMA_VERSION {
        return Err(SceneError::SchemaVersion(version));
    }
    let doc: SceneDoc = serde_json::from_value(probe)?;
    let mut subjects = Vec::with_capacity(doc.subjects.len());
    for s in doc.subjects {
        let color = palette_color(s.index);
        if s.color.name != color.name || s.color.rgb != color.rgb {
            return Err(SceneError::Invalid(format!("subject {:?} color does not match palette slot {}", s.id, s.index)));
        }
        subjects.push(Subject {
            id: s.id,
            index: s.index,
            prompt: s.prompt,
            identity_image_ref: s.identity_image_ref,
            mesh: s.mesh,
            color,
            planned_bbox: s.planned_bbox,
            transform: s.transform,
            target_orientation: s.target_orientation,
            estimated_orientation: s.estimated_orientation,
        });
    }
    let scene = Scene {
        bounds: doc.bounds,
        subjects,
        background_prompt: doc.background_prompt,
        enhanced_prompt: doc.enhanced_prompt,
    };
    scene.validate()?;
    Ok(scene)
}
