//! Planned subject boxes and fitting meshes into them.

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Vec3};
use crate::mesh::{TriMesh, PLANAR_EPS};
use crate::real::Real;
use crate::transform::TransformTrs;

/// Box given by its center and full side lengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bbox3<T> {
    pub center: Vec3<T>,
    pub extents: Vec3<T>,
}

impl<T: Real> Bbox3<T> {
    pub fn new(center: Vec3<T>, extents: Vec3<T>) -> Self {
        Self { center, extents }
    }

    pub fn from_aabb(b: &Aabb<T>) -> Self {
        Self { center: b.center(), extents: b.extents() }
    }

    pub fn aabb(&self) -> Aabb<T> {
        let h = self.extents * T::half();
        Aabb { min: self.center - h, max: self.center + h }
    }

    pub fn bottom(&self) -> T {
        self.center.y - self.extents.y * T::half()
    }

    pub fn is_valid(&self) -> bool {
        self.center.is_finite()
            && self.extents.is_finite()
            && self.extents.x > T::zero()
            && self.extents.y > T::zero()
            && self.extents.z > T::zero()
    }
}

/// Zero-rotation transform that fits `mesh` into `bbox` with uniform scale.
///
/// The scale is the tightest per-axis ratio (axes where the mesh is
/// degenerate do not participate). The result is centered in X and Z and
/// rests on the bottom face of the box.
pub fn place_in_bbox<T: Real>(mesh: &TriMesh<T>, bbox: &Bbox3<T>) -> TransformTrs<T> {
    let local = mesh.local_aabb();
    let e = local.extents();
    let eps = T::lit(PLANAR_EPS);
    let scale = (0..3)
        .filter(|&i| e[i] > eps)
        .map(|i| bbox.extents[i] / e[i])
        .fold(None, |acc: Option<T>, r| Some(acc.map_or(r, |a| a.min(r))))
        .unwrap_or_else(T::one);
    let c = local.center();
    let translation = Vec3::new(
        bbox.center.x - c.x * scale,
        bbox.bottom() - local.min.y * scale,
        bbox.center.z - c.z * scale,
    );
    TransformTrs { translation, rotation: Vec3::zero(), scale }
}
