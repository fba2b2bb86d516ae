//! Similarity transforms with extrinsic X→Y→Z Euler rotations.

use serde::{Deserialize, Serialize};

use crate::geometry::{Mat3, Vec3};
use crate::real::Real;

/// Uniform scale, then rotation about the origin, then translation.
///
/// `rotation` holds degrees about the world X, Y and Z axes applied in that
/// order (matrix `Rz * Ry * Rx`). Stored angles are kept in (-180, 180].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformTrs<T> {
    pub translation: Vec3<T>,
    pub rotation: Vec3<T>,
    pub scale: T,
}

impl<T: Real> Default for TransformTrs<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> TransformTrs<T> {
    pub fn identity() -> Self {
        Self { translation: Vec3::zero(), rotation: Vec3::zero(), scale: T::one() }
    }

    pub fn from_translation(t: Vec3<T>) -> Self {
        Self { translation: t, ..Self::identity() }
    }

    pub fn from_rotation(deg: Vec3<T>) -> Self {
        Self { rotation: deg, ..Self::identity() }
    }

    pub fn is_identity(&self) -> bool {
        self.translation == Vec3::zero() && self.rotation == Vec3::zero() && self.scale == T::one()
    }

    pub fn is_valid(&self) -> bool {
        self.scale > T::zero()
            && self.scale.is_finite()
            && self.translation.is_finite()
            && self.rotation.is_finite()
    }

    pub fn rotation_matrix(&self) -> Mat3<T> {
        euler_matrix(self.rotation)
    }

    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation_matrix().mul_vec(p * self.scale) + self.translation
    }

    /// Apply `delta`'s scale and rotation about `pivot`, then its translation,
    /// on top of `self`.
    pub fn compose_about(&self, delta: &TransformTrs<T>, pivot: Vec3<T>) -> TransformTrs<T> {
        if delta.is_identity() {
            return *self;
        }
        let rotates = delta.rotation != Vec3::zero();
        if !rotates && delta.scale == T::one() {
            return TransformTrs { translation: self.translation + delta.translation, ..*self };
        }
        let rd = delta.rotation_matrix();
        let rotation = if rotates {
            matrix_to_euler(&rd.mul_mat(&self.rotation_matrix()))
        } else {
            self.rotation
        };
        let translation =
            rd.mul_vec((self.translation - pivot) * delta.scale) + pivot + delta.translation;
        TransformTrs { translation, rotation, scale: self.scale * delta.scale }
    }
}

/// `Rz(z) * Ry(y) * Rx(x)` for angles in degrees.
pub fn euler_matrix<T: Real>(deg: Vec3<T>) -> Mat3<T> {
    Mat3::rot_z(deg.z).mul_mat(&Mat3::rot_y(deg.y)).mul_mat(&Mat3::rot_x(deg.x))
}

/// Inverse of [`euler_matrix`] for proper rotations. At gimbal lock the Z
/// angle is pinned to zero.
pub fn matrix_to_euler<T: Real>(m: &Mat3<T>) -> Vec3<T> {
    let r = &m.rows;
    let sy = (-r[2][0]).max(-T::one()).min(T::one());
    let lock = T::lit(1.0 - 1e-12);
    let (x, y, z) = if sy.abs() < lock {
        (r[2][1].atan2(r[2][2]), sy.asin(), r[1][0].atan2(r[0][0]))
    } else if sy > T::zero() {
        (r[0][1].atan2(r[0][2]), T::FRAC_PI_2(), T::zero())
    } else {
        ((-r[0][1]).atan2(-r[0][2]), -T::FRAC_PI_2(), T::zero())
    };
    Vec3::new(x, y, z).map(|a| normalize_degrees(a.to_degrees()))
}

/// Wrap an angle into (-180, 180].
pub fn normalize_degrees<T: Real>(a: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let wrapped = a - full * ((a - half) / full).ceil();
    if wrapped <= -half {
        wrapped + full
    } else {
        wrapped
    }
}
