//! Triangle meshes, their bounds, and a few procedural primitives.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::geometry::{Aabb, Vec3};
use crate::real::Real;
use crate::transform::TransformTrs;

/// Extents below this are treated as degenerate (planar meshes).
pub const PLANAR_EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriMesh<T> {
    pub id: String,
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[u32; 3]>,
}

impl<T: Real> TriMesh<T> {
    /// Builds a mesh and checks its invariants.
    pub fn new(
        id: impl Into<String>,
        vertices: Vec<Vec3<T>>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self, GeometryError> {
        let mesh = Self { id: id.into(), vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.triangles.is_empty() {
            return Err(GeometryError::EmptyMesh(self.id.clone()));
        }
        let n = self.vertices.len();
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i as usize >= n)) {
            return Err(GeometryError::IndexOutOfRange { mesh: self.id.clone(), triangle: *t, vertices: n });
        }
        if self.vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(self.id.clone()));
        }
        Ok(())
    }

    /// Bounds of the untransformed vertices.
    pub fn local_aabb(&self) -> Aabb<T> {
        Aabb::from_points(self.vertices.iter().copied()).expect("validated mesh has vertices")
    }

    pub fn triangle(&self, i: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[i];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn transformed(&self, t: &TransformTrs<T>) -> TriMesh<T> {
        let r = t.rotation_matrix();
        TriMesh {
            id: self.id.clone(),
            vertices: self.vertices.iter().map(|&v| r.mul_vec(v * t.scale) + t.translation).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn scaled(&self, s: T) -> TriMesh<T> {
        TriMesh {
            id: self.id.clone(),
            vertices: self.vertices.iter().map(|&v| v * s).collect(),
            triangles: self.triangles.clone(),
        }
    }
}

/// Tight axis-aligned bounds of the mesh after `transform`.
pub fn compute_aabb<T: Real>(mesh: &TriMesh<T>, transform: &TransformTrs<T>) -> Aabb<T> {
    let r = transform.rotation_matrix();
    Aabb::from_points(mesh.vertices.iter().map(|&v| r.mul_vec(v * transform.scale) + transform.translation))
        .expect("validated mesh has vertices")
}

/// Local extents normalized so the largest is one, with degenerate axes
/// clamped to [`PLANAR_EPS`].
pub fn aspect_ratio<T: Real>(mesh: &TriMesh<T>) -> Vec3<T> {
    let eps = T::lit(PLANAR_EPS);
    let e = mesh.local_aabb().extents();
    let largest = e.max_component();
    if largest <= T::zero() {
        return Vec3::splat(eps);
    }
    (e / largest).map(|c| c.max(eps))
}

/// Axis-aligned box centered at the origin.
pub fn cuboid<T: Real>(id: impl Into<String>, extents: Vec3<T>) -> TriMesh<T> {
    let h = extents * T::half();
    let vertices = Aabb::new(-h, h).corners().to_vec();
    // Corner index bits are zyx; faces wound outward.
    let triangles = vec![
        [0, 2, 3], [0, 3, 1], // -z
        [4, 5, 7], [4, 7, 6], // +z
        [0, 4, 6], [0, 6, 2], // -x
        [1, 3, 7], [1, 7, 5], // +x
        [0, 1, 5], [0, 5, 4], // -y
        [2, 6, 7], [2, 7, 3], // +y
    ];
    TriMesh { id: id.into(), vertices, triangles }
}

pub fn unit_cube<T: Real>() -> TriMesh<T> {
    cuboid("unit-cube", Vec3::splat(T::one()))
}

/// Icosphere of the given radius, centered at the origin.
pub fn icosphere<T: Real>(id: impl Into<String>, radius: T, subdivisions: u32) -> TriMesh<T> {
    let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3<f64>> = [
        [-1.0, t, 0.0], [1.0, t, 0.0], [-1.0, -t, 0.0], [1.0, -t, 0.0],
        [0.0, -1.0, t], [0.0, 1.0, t], [0.0, -1.0, -t], [0.0, 1.0, -t],
        [t, 0.0, -1.0], [t, 0.0, 1.0], [-t, 0.0, -1.0], [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|&a| Vec3::from(a).normalized().unwrap())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3<f64>>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = (verts[a as usize] + verts[b as usize]) * 0.5;
                verts.push(m.normalized().unwrap());
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh {
        id: id.into(),
        vertices: verts.into_iter().map(|v| v.cast::<T>() * radius).collect(),
        triangles: faces,
    }
}

/// Closed cylinder along +Y, centered at the origin.
pub fn cylinder<T: Real>(id: impl Into<String>, radius: T, height: T, segments: u32) -> TriMesh<T> {
    let segments = segments.max(3);
    let hy = height * T::half();
    let mut vertices = Vec::with_capacity(2 * segments as usize + 2);
    for i in 0..segments {
        let a = T::lit(std::f64::consts::TAU * f64::from(i) / f64::from(segments));
        let (s, c) = a.sin_cos();
        vertices.push(Vec3::new(radius * c, -hy, radius * s));
        vertices.push(Vec3::new(radius * c, hy, radius * s));
    }
    let bottom = vertices.len() as u32;
    vertices.push(Vec3::new(T::zero(), -hy, T::zero()));
    vertices.push(Vec3::new(T::zero(), hy, T::zero()));
    let top = bottom + 1;
    let mut triangles = Vec::with_capacity(4 * segments as usize);
    for i in 0..segments {
        let j = (i + 1) % segments;
        let (b0, t0, b1, t1) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
        triangles.push([b0, t0, t1]);
        triangles.push([b0, t1, b1]);
        triangles.push([bottom, b0, b1]);
        triangles.push([top, t1, t0]);
    }
    TriMesh { id: id.into(), vertices, triangles }
}

/// Square of side `size` in the XY plane at z = 0.
pub fn quad<T: Real>(id: impl Into<String>, size: T) -> TriMesh<T> {
    let h = size * T::half();
    let z = T::zero();
    TriMesh {
        id: id.into(),
        vertices: vec![Vec3::new(-h, -h, z), Vec3::new(h, -h, z), Vec3::new(h, h, z), Vec3::new(-h, h, z)],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
    }
}
