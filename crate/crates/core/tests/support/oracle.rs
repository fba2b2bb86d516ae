//! Independent reference implementations used by the renderer tests.
//!
//! Nothing here calls into the rasterizer or the camera fitting code: rays
//! and projections are rebuilt from the raw `CameraSpec` fields.

#![allow(dead_code)]

use scratchpad_core::{Aabb, Bbox3, CameraSpec, Scene, TransformTrs, TriMesh, Vec3};

pub struct Frame {
    pub eye: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
    pub focal: f64,
    pub w: f64,
    pub h: f64,
}

pub fn frame(cam: &CameraSpec) -> Frame {
    let forward = Vec3::new(-cam.direction.x, -cam.direction.y, -cam.direction.z);
    let c = Vec3::new(
        forward.y * cam.up_hint.z - forward.z * cam.up_hint.y,
        forward.z * cam.up_hint.x - forward.x * cam.up_hint.z,
        forward.x * cam.up_hint.y - forward.y * cam.up_hint.x,
    );
    let n = (c.x * c.x + c.y * c.y + c.z * c.z).sqrt();
    let right = Vec3::new(c.x / n, c.y / n, c.z / n);
    let up = Vec3::new(
        right.y * forward.z - right.z * forward.y,
        right.z * forward.x - right.x * forward.z,
        right.x * forward.y - right.y * forward.x,
    );
    let eye = Vec3::new(
        cam.center.x + cam.direction.x * cam.distance,
        cam.center.y + cam.direction.y * cam.distance,
        cam.center.z + cam.direction.z * cam.distance,
    );
    let h = f64::from(cam.height);
    Frame { eye, right, up, forward, focal: (h / 2.0) / (cam.vfov_deg.to_radians() / 2.0).tan(), w: f64::from(cam.width), h }
}

impl Frame {
    /// Ray direction through a pixel center, scaled so its forward component is 1.
    pub fn ray(&self, px: u32, py: u32) -> Vec3 {
        let sx = (f64::from(px) + 0.5 - self.w / 2.0) / self.focal;
        let sy = -(f64::from(py) + 0.5 - self.h / 2.0) / self.focal;
        self.forward + self.right * sx + self.up * sy
    }

    /// Pixel coordinates of a world point, `None` behind the eye.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        let d = p - self.eye;
        let z = d.dot(self.forward);
        if z <= 0.0 {
            return None;
        }
        Some((self.w / 2.0 + self.focal * d.dot(self.right) / z, self.h / 2.0 - self.focal * d.dot(self.up) / z))
    }
}

/// Moller-Trumbore; returns the ray parameter of the hit.
pub fn ray_triangle(orig: Vec3, dir: Vec3, tri: [Vec3; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = orig - tri[0];
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > 0.0).then_some(t)
}

fn ray_box(orig: Vec3, dir: Vec3, b: &Aabb) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for a in 0..3 {
        let inv = 1.0 / dir[a];
        let (mut near, mut far) = ((b.min[a] - orig[a]) * inv, (b.max[a] - orig[a]) * inv);
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

enum Node {
    Leaf { bounds: Aabb, tris: Vec<[Vec3; 3]> },
    Split { bounds: Aabb, kids: Box<[Node; 2]> },
}

/// Median-split bounding volume hierarchy over world triangles.
pub struct Bvh {
    root: Node,
}

fn tri_bounds(tris: &[[Vec3; 3]]) -> Aabb {
    Aabb::from_points(tris.iter().flat_map(|t| t.iter().copied())).unwrap()
}

fn build(mut tris: Vec<[Vec3; 3]>) -> Node {
    let bounds = tri_bounds(&tris);
    if tris.len() <= 4 {
        return Node::Leaf { bounds, tris };
    }
    let e = bounds.extents();
    let axis = if e.x >= e.y && e.x >= e.z { 0 } else if e.y >= e.z { 1 } else { 2 };
    let key = |t: &[Vec3; 3]| t[0][axis] + t[1][axis] + t[2][axis];
    tris.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    let right = tris.split_off(tris.len() / 2);
    Node::Split { bounds, kids: Box::new([build(tris), build(right)]) }
}

impl Bvh {
    pub fn new(mesh: &TriMesh) -> Self {
        let tris = (0..mesh.triangles.len()).map(|i| mesh.triangle(i)).collect();
        Self { root: build(tris) }
    }

    pub fn hit(&self, orig: Vec3, dir: Vec3) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut stack = vec![&self.root];
        while let Some(n) = stack.pop() {
            let bounds = match n {
                Node::Leaf { bounds, .. } | Node::Split { bounds, .. } => bounds,
            };
            let grown = Aabb { min: bounds.min - Vec3::splat(1e-9), max: bounds.max + Vec3::splat(1e-9) };
            match ray_box(orig, dir, &grown) {
                Some((t0, _)) if best.map_or(true, |b| t0 <= b) => {}
                _ => continue,
            }
            match n {
                Node::Leaf { tris, .. } => {
                    for t in tris {
                        if let Some(h) = ray_triangle(orig, dir, *t) {
                            if best.map_or(true, |b| h < b) {
                                best = Some(h);
                            }
                        }
                    }
                }
                Node::Split { kids, .. } => {
                    stack.push(&kids[0]);
                    stack.push(&kids[1]);
                }
            }
        }
        best
    }
}

/// Nearest subject hit through a pixel: `(subject index + 1, forward depth)`.
pub struct SceneCaster {
    pub frame: Frame,
    subjects: Vec<(u16, Bvh)>,
}

impl SceneCaster {
    pub fn new(scene: &Scene, cam: &CameraSpec) -> Self {
        let subjects = scene
            .subjects
            .iter()
            .filter_map(|s| s.world_mesh().map(|m| ((s.index + 1) as u16, Bvh::new(&m))))
            .collect();
        Self { frame: frame(cam), subjects }
    }

    pub fn cast(&self, px: u32, py: u32) -> Option<(u16, f64)> {
        let dir = self.frame.ray(px, py);
        let mut best: Option<(u16, f64)> = None;
        for (id, bvh) in &self.subjects {
            if let Some(t) = bvh.hit(self.frame.eye, dir) {
                if best.map_or(true, |(_, b)| t < b) {
                    best = Some((*id, t));
                }
            }
        }
        best
    }
}

/// Brute-force containment check: every box corner inside the margin frame.
pub fn corners_inside(scene: &Scene, cam: &CameraSpec, margin: f64) -> bool {
    let f = frame(cam);
    scene.subjects.iter().filter_map(|s| s.world_aabb()).all(|b| {
        b.corners().iter().all(|&p| match f.project(p) {
            Some((u, v)) => u >= margin * f.w && u <= (1.0 - margin) * f.w && v >= margin * f.h && v <= (1.0 - margin) * f.h,
            None => false,
        })
    })
}

/// Small deterministic generator so scene sets are reproducible without
/// pulling the generator crate into every test.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

/// Up to `max_subjects` convex primitives (boxes, spheres, cylinders) placed
/// in random bboxes on or above the ground, with random yaw.
pub fn random_scene(rng: &mut Lcg, max_subjects: usize) -> Scene {
    let n = 1 + rng.below(max_subjects);
    let mut scene = Scene::default();
    for i in 0..n {
        let id = format!("s{i}");
        scene = scene.with_subject(id.clone(), format!("primitive {i}")).unwrap();
        let mesh = match rng.below(3) {
            0 => scratchpad_core::cuboid("box", Vec3::new(rng.range(0.3, 2.0), rng.range(0.3, 2.0), rng.range(0.3, 2.0))),
            1 => scratchpad_core::icosphere("ball", 0.5, 2),
            _ => scratchpad_core::cylinder("can", rng.range(0.2, 0.8), rng.range(0.5, 2.5), 24),
        };
        let ext = Vec3::new(rng.range(0.4, 2.5), rng.range(0.4, 2.5), rng.range(0.4, 2.5));
        let center = Vec3::new(rng.range(-3.5, 3.5), ext.y / 2.0 + rng.range(0.0, 1.0), rng.range(-3.5, 3.5));
        let bbox = Bbox3::new(center, ext);
        let yaw = rng.range(-180.0, 180.0);
        scene = scene
            .map_subject(&id, |s| {
                s.transform = scratchpad_core::place_in_bbox(&mesh, &bbox);
                s.mesh = Some(mesh);
                s.planned_bbox = Some(bbox);
                Ok(())
            })
            .unwrap()
            .transform_subject(&id, &TransformTrs::from_rotation(Vec3::new(0.0, yaw, 0.0)))
            .unwrap();
    }
    scene
}

/// Fraction of interior subject pixels whose rendered depth agrees with the
/// ray caster within `rel_tol`. Pixels whose 8 neighbours do not all carry
/// the same id are silhouette pixels and are skipped.
pub fn depth_agreement(scene: &Scene, cam: &CameraSpec, out: &scratchpad_core::RenderOutput, rel_tol: f64) -> (usize, usize) {
    let caster = SceneCaster::new(scene, cam);
    let (w, h) = (out.width, out.height);
    let mut checked = 0;
    let mut good = 0;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let id = out.id_at(x, y);
            if id == 0 {
                continue;
            }
            let interior = (-1i64..=1).all(|dy| {
                (-1i64..=1).all(|dx| out.id_at((x as i64 + dx) as u32, (y as i64 + dy) as u32) == id)
            });
            if !interior {
                continue;
            }
            checked += 1;
            let d = f64::from(out.depth_at(x, y));
            if let Some((_, t)) = caster.cast(x, y) {
                if (d - t).abs() <= rel_tol * t {
                    good += 1;
                }
            }
        }
    }
    (good, checked)
}
