//! Scalar abstraction shared by the geometric types.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the geometry kernel.
///
/// Implemented for `f32` and `f64`. Scene documents and the renderer use
/// `f64`; the `f32` instantiation exists for callers that keep meshes in
/// single precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Half of one, without a literal conversion at every call site.
    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }
}

impl Real for f32 {}
impl Real for f64 {}
