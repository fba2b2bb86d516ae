//! Camera model, distance fitting, and the fixed view sets.

use serde::{Deserialize, Serialize};

use crate::error::RenderError;
use crate::{Aabb, Scene, Vec3};

/// Fraction of the image kept clear on every side when framing.
pub const FRAME_MARGIN: f64 = 0.05;
pub const DEFAULT_VFOV_DEG: f64 = 50.0;
pub const DEFAULT_IMAGE_SIZE: u32 = 1024;
/// Bisection stops once the bracket is narrower than this (world units).
pub const FIT_TOLERANCE: f64 = 1e-3;
const FIT_LOWER: f64 = 1e-3;

/// Camera placed at `center + distance * direction`, looking back along
/// `-direction`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub center: Vec3,
    pub direction: Vec3,
    pub distance: f64,
    pub up_hint: Vec3,
    pub vfov_deg: f64,
    pub width: u32,
    pub height: u32,
}

/// +Y, or +Z when looking straight along the Y axis.
pub fn default_up_hint(direction: Vec3) -> Vec3 {
    if direction.y.abs() > 1.0 - 1e-9 {
        Vec3::unit_z()
    } else {
        Vec3::unit_y()
    }
}

impl CameraSpec {
    /// Normalizes `direction` and picks the default up hint.
    pub fn looking_from(
        center: Vec3,
        direction: Vec3,
        distance: f64,
        vfov_deg: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, RenderError> {
        let direction =
            direction.normalized().ok_or_else(|| RenderError::InvalidCamera("zero view direction".into()))?;
        let cam = Self { center, direction, distance, up_hint: default_up_hint(direction), vfov_deg, width, height };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: String| Err(RenderError::InvalidCamera(m));
        if !(self.center.is_finite() && self.direction.is_finite() && self.up_hint.is_finite()) {
            return bad("non-finite vector".into());
        }
        if (self.direction.norm() - 1.0).abs() > 1e-9 {
            return bad(format!("direction has length {}", self.direction.norm()));
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return bad(format!("distance {} must be positive", self.distance));
        }
        if !(self.vfov_deg > 10.0 && self.vfov_deg < 120.0) {
            return bad(format!("vfov {} outside (10, 120)", self.vfov_deg));
        }
        if self.width == 0 || self.height == 0 {
            return bad("image size must be positive".into());
        }
        if self.direction.cross(self.up_hint).norm() < 1e-9 {
            return bad("up hint is parallel to the view axis".into());
        }
        Ok(())
    }

    pub fn eye(&self) -> Vec3 {
        self.center + self.direction * self.distance
    }

    pub fn basis(&self) -> ViewBasis {
        ViewBasis::new(self)
    }
}

/// Orthonormal camera frame plus pinhole intrinsics.
#[derive(Clone, Copy, Debug)]
pub struct ViewBasis {
    pub eye: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
    /// Focal length in pixels (square pixels).
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
}

impl ViewBasis {
    fn new(cam: &CameraSpec) -> Self {
        let forward = -cam.direction;
        let right = forward.cross(cam.up_hint).normalized().expect("validated up hint");
        let up = right.cross(forward);
        let focal = (f64::from(cam.height) / 2.0) / (cam.vfov_deg.to_radians() / 2.0).tan();
        Self {
            eye: cam.eye(),
            right,
            up,
            forward,
            focal,
            cx: f64::from(cam.width) / 2.0,
            cy: f64::from(cam.height) / 2.0,
        }
    }

    /// World point to camera coordinates `(x right, y up, z forward)`.
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        let d = p - self.eye;
        Vec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }

    pub fn from_camera(&self, c: Vec3) -> Vec3 {
        self.eye + self.right * c.x + self.up * c.y + self.forward * c.z
    }

    /// Camera coordinates to continuous pixel coordinates (origin top-left).
    pub fn camera_to_pixel(&self, c: Vec3) -> (f64, f64) {
        (self.cx + self.focal * c.x / c.z, self.cy - self.focal * c.y / c.z)
    }

    /// Pixel position and forward depth; `None` behind the eye.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        let c = self.to_camera(p);
        if c.z <= 0.0 {
            return None;
        }
        let (u, v) = self.camera_to_pixel(c);
        Some((u, v, c.z))
    }
}

fn framed_boxes(scene: &Scene) -> Result<Vec<Aabb>, RenderError> {
    let boxes: Vec<Aabb> = scene.subjects.iter().filter_map(|s| s.world_aabb()).collect();
    if boxes.is_empty() {
        return Err(RenderError::NothingToFrame);
    }
    Ok(boxes)
}

/// Whether every corner of every subject box projects inside the image with
/// `margin` (fraction of width/height) kept clear on all sides.
pub fn frame_contains(scene: &Scene, camera: &CameraSpec, margin: f64) -> bool {
    let basis = camera.basis();
    let (w, h) = (f64::from(camera.width), f64::from(camera.height));
    scene.subjects.iter().filter_map(|s| s.world_aabb()).all(|b| {
        b.corners().iter().all(|&p| match basis.project(p) {
            Some((u, v, _)) => u >= margin * w && u <= (1.0 - margin) * w && v >= margin * h && v <= (1.0 - margin) * h,
            None => false,
        })
    })
}

/// Mean of the subjects' world-box centers.
pub fn scene_focus(scene: &Scene) -> Result<Vec3, RenderError> {
    let boxes = framed_boxes(scene)?;
    let sum = boxes.iter().fold(Vec3::zero(), |acc, b| acc + b.center());
    Ok(sum / boxes.len() as f64)
}

/// Smallest distance along `direction` at which all subjects are framed.
///
/// Containment is monotone in the distance, so a bisection over
/// `[1e-3, 10 * scene diagonal]` converges; the returned distance is the
/// upper end of the final bracket and therefore always frames the scene.
pub fn fit_camera(
    scene: &Scene,
    direction: Vec3,
    vfov_deg: f64,
    width: u32,
    height: u32,
) -> Result<CameraSpec, RenderError> {
    let boxes = framed_boxes(scene)?;
    let center = scene_focus(scene)?;
    let union = boxes.iter().skip(1).fold(boxes[0], |acc, b| acc.union(b));
    let mut cam = CameraSpec::looking_from(center, direction, 1.0, vfov_deg, width, height)?;
    let fits = |d: f64, cam: &mut CameraSpec| {
        cam.distance = d;
        frame_contains(scene, cam, FRAME_MARGIN)
    };
    let mut lo = FIT_LOWER;
    if fits(lo, &mut cam) {
        return Ok(cam);
    }
    let mut hi = (10.0 * union.diagonal()).max(2.0 * lo);
    while !fits(hi, &mut cam) {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(RenderError::InvalidCamera("could not frame the scene".into()));
        }
    }
    while hi - lo > FIT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if fits(mid, &mut cam) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    cam.distance = hi;
    Ok(cam)
}

pub const PROPOSAL_DIRECTIONS: [(&str, [f64; 3]); 5] = [
    ("proposal0", [0.0, 0.0, -1.0]),
    ("proposal1", [-0.3, 0.0, -1.0]),
    ("proposal2", [0.3, 0.0, -1.0]),
    ("proposal3", [0.0, 0.3, -1.0]),
    ("proposal4", [0.0, 1.0, 0.0]),
];

pub const MULTIVIEW_DIRECTIONS: [(&str, [f64; 3]); 4] = [
    ("front", [0.0, 0.0, -1.0]),
    ("left", [-1.0, 0.0, 0.0]),
    ("right", [1.0, 0.0, 0.0]),
    ("top", [0.0, 1.0, 0.0]),
];

/// Unnormalized direction for a named view.
pub fn view_direction(name: &str) -> Option<Vec3> {
    PROPOSAL_DIRECTIONS.iter().chain(MULTIVIEW_DIRECTIONS.iter()).find(|(n, _)| *n == name).map(|(_, d)| Vec3::from(*d))
}

pub fn view_camera(scene: &Scene, name: &str, vfov_deg: f64, width: u32, height: u32) -> Result<CameraSpec, RenderError> {
    let dir = view_direction(name).ok_or_else(|| RenderError::UnknownView(name.into()))?;
    fit_camera(scene, dir, vfov_deg, width, height)
}

/// The five fitted proposal cameras, in order.
pub fn proposal_cameras(scene: &Scene, vfov_deg: f64, width: u32, height: u32) -> Result<Vec<CameraSpec>, RenderError> {
    PROPOSAL_DIRECTIONS.iter().map(|(_, d)| fit_camera(scene, Vec3::from(*d), vfov_deg, width, height)).collect()
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl PixelRect {
    pub fn width(&self) -> i64 {
        (self.x1 - self.x0).max(0)
    }

    pub fn height(&self) -> i64 {
        (self.y1 - self.y0).max(0)
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn diagonal(&self) -> f64 {
        ((self.width() * self.width() + self.height() * self.height()) as f64).sqrt()
    }

    /// Grows every side by `by` pixels (rounded outward) and clamps.
    pub fn dilate(&self, by: f64, width: u32, height: u32) -> PixelRect {
        PixelRect {
            x0: (self.x0 as f64 - by).floor() as i64,
            y0: (self.y0 as f64 - by).floor() as i64,
            x1: (self.x1 as f64 + by).ceil() as i64,
            y1: (self.y1 as f64 + by).ceil() as i64,
        }
        .clamp(width, height)
    }

    pub fn clamp(&self, width: u32, height: u32) -> PixelRect {
        let (w, h) = (i64::from(width), i64::from(height));
        PixelRect { x0: self.x0.clamp(0, w), y0: self.y0.clamp(0, h), x1: self.x1.clamp(0, w), y1: self.y1.clamp(0, h) }
    }

    pub fn intersects(&self, o: &PixelRect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }
}

/// Fractional padding added on each side of a projected subject rectangle.
pub const RECT_PADDING: f64 = 0.10;

/// Continuous-pixel bounds of the subject's projected world-box corners.
/// `None` when every corner is behind the camera; corners behind the eye
/// widen the result to the full image.
pub fn project_subject_bounds(scene: &Scene, camera: &CameraSpec, subject_id: &str) -> Result<Option<[f64; 4]>, RenderError> {
    let subject = scene.subject(subject_id)?;
    let b = subject.world_aabb().ok_or_else(|| crate::SceneError::MissingMesh(subject_id.into()))?;
    let basis = camera.basis();
    let projected: Vec<Option<(f64, f64, f64)>> = b.corners().iter().map(|&p| basis.project(p)).collect();
    if projected.iter().all(Option::is_none) {
        return Ok(None);
    }
    if projected.iter().any(Option::is_none) {
        return Ok(Some([0.0, 0.0, f64::from(camera.width), f64::from(camera.height)]));
    }
    let mut r = [f64::MAX, f64::MAX, f64::MIN, f64::MIN];
    for (u, v, _) in projected.into_iter().flatten() {
        r = [r[0].min(u), r[1].min(v), r[2].max(u), r[3].max(v)];
    }
    Ok(Some(r))
}

/// Padded, clamped pixel rectangle around a subject's projection.
pub fn project_subject_rect(scene: &Scene, camera: &CameraSpec, subject_id: &str) -> Result<PixelRect, RenderError> {
    let [u0, v0, u1, v1] = project_subject_bounds(scene, camera, subject_id)?
        .ok_or_else(|| RenderError::BehindCamera(subject_id.into()))?;
    let (pu, pv) = ((u1 - u0) * RECT_PADDING, (v1 - v0) * RECT_PADDING);
    Ok(PixelRect {
        x0: (u0 - pu).floor() as i64,
        y0: (v0 - pv).floor() as i64,
        x1: (u1 + pu).ceil() as i64,
        y1: (v1 + pv).ceil() as i64,
    }
    .clamp(camera.width, camera.height))
}
