//! Scene model, geometry kernel and software renderer for a 3D layout
//! scratchpad used to plan text-to-image compositions.
//!
//! The geometric types are generic over the scalar ([`real::Real`]); the
//! aliases at the crate root fix them to `f64`, which is what scene
//! documents and the renderer use.

pub mod bbox;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod obj;
pub mod real;
pub mod render;
pub mod scene;
pub mod transform;

pub use bbox::place_in_bbox;
pub use error::{GeometryError, ObjError, RenderError, SceneError};
pub use mesh::{aspect_ratio, compute_aabb, cuboid, cylinder, icosphere, quad, unit_cube, PLANAR_EPS};
pub use real::Real;
pub use render::camera::{
    fit_camera, frame_contains, project_subject_rect, proposal_cameras, view_camera, CameraSpec, PixelRect,
};
pub use render::output::RenderOutput;
pub use render::{multiview_renders, proposal_renders, render, RenderDesign};
pub use scene::{
    deserialize_scene, palette_color, scene_description, serialize_scene, PaletteColor, Scene, Subject,
    WorkspaceBounds,
};

pub type Vec3 = geometry::Vec3<f64>;
pub type Vec3f = geometry::Vec3<f32>;
pub type Mat3 = geometry::Mat3<f64>;
pub type Aabb = geometry::Aabb<f64>;
pub type Aabbf = geometry::Aabb<f32>;
pub type TriMesh = mesh::TriMesh<f64>;
pub type TriMeshf = mesh::TriMesh<f32>;
pub type TransformTrs = transform::TransformTrs<f64>;
pub type Bbox3 = bbox::Bbox3<f64>;
