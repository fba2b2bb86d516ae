//! Software renderer for the scratchpad.

pub mod camera;
pub mod font;
pub mod output;
pub mod raster;

use std::fmt;
use std::str::FromStr;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::RenderError;
use crate::{Scene, Vec3};
use camera::{CameraSpec, ViewBasis};
use output::RenderOutput;
use raster::Primitive;

pub const BACKGROUND: [u8; 3] = [255, 255, 255];
pub const GROUND: [u8; 3] = [128, 128, 128];
pub const BACK_PLANE: [u8; 3] = [200, 200, 200];
pub const GRID: [u8; 3] = [150, 150, 150];
pub const RULER: [u8; 3] = [30, 30, 30];
/// Height at which rulers and grid lines float above the ground.
pub const OVERLAY_LIFT: f64 = 1e-3;
const TICK_HALF: f64 = 0.1;
const LABEL_HEIGHT: f64 = 0.25;

/// Scaffolding drawn around the subjects.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenderDesign {
    GroundBackPlane,
    GroundPlane,
    GroundBackPlaneRulers,
    #[default]
    GroundPlaneRulers,
    GridRulers,
}

impl RenderDesign {
    pub const ALL: [RenderDesign; 5] = [
        RenderDesign::GroundBackPlane,
        RenderDesign::GroundPlane,
        RenderDesign::GroundBackPlaneRulers,
        RenderDesign::GroundPlaneRulers,
        RenderDesign::GridRulers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RenderDesign::GroundBackPlane => "ground-back-plane",
            RenderDesign::GroundPlane => "ground-plane",
            RenderDesign::GroundBackPlaneRulers => "ground-back-plane-rulers",
            RenderDesign::GroundPlaneRulers => "ground-plane-rulers",
            RenderDesign::GridRulers => "grid-rulers",
        }
    }

    pub fn solid_ground(self) -> bool {
        self != RenderDesign::GridRulers
    }

    pub fn back_plane(self) -> bool {
        matches!(self, RenderDesign::GroundBackPlane | RenderDesign::GroundBackPlaneRulers)
    }

    pub fn rulers(self) -> bool {
        matches!(self, RenderDesign::GroundBackPlaneRulers | RenderDesign::GroundPlaneRulers | RenderDesign::GridRulers)
    }
}

impl fmt::Display for RenderDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RenderDesign {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        RenderDesign::ALL.into_iter().find(|d| d.name() == s).ok_or_else(|| {
            let names: Vec<_> = RenderDesign::ALL.iter().map(|d| d.name()).collect();
            format!("unknown render design {s:?} (expected one of {})", names.join(", "))
        })
    }
}

struct Builder<'a> {
    basis: &'a ViewBasis,
    prims: Vec<Primitive>,
    line_half_width: f64,
}

impl Builder<'_> {
    fn tri(&mut self, a: Vec3, b: Vec3, c: Vec3, color: [u8; 3], id: u16) {
        let verts = [a, b, c].map(|v| self.basis.to_camera(v));
        self.prims.push(Primitive::Triangle { verts, color, id });
    }

    fn quad(&mut self, q: [Vec3; 4], color: [u8; 3]) {
        self.tri(q[0], q[1], q[2], color, 0);
        self.tri(q[0], q[2], q[3], color, 0);
    }

    fn line(&mut self, a: Vec3, b: Vec3, color: [u8; 3]) {
        let (a, b) = (self.basis.to_camera(a), self.basis.to_camera(b));
        self.prims.push(Primitive::Line { a, b, color, half_width: self.line_half_width });
    }

    /// Camera-facing text centered horizontally on `anchor`, sitting on it.
    fn label(&mut self, anchor: Vec3, text: String) {
        let cell = LABEL_HEIGHT / font::GLYPH_H as f64;
        let width = cell * ((font::GLYPH_W + 1) * text.len()) as f64;
        let mut origin = self.basis.to_camera(anchor);
        origin.x -= width / 2.0;
        self.prims.push(Primitive::Label { origin, cell, text, color: RULER });
    }

    fn scaffolding(&mut self, scene: &Scene, design: RenderDesign) {
        let b = scene.bounds;
        let (xh, zh, ym) = (b.x_half, b.z_half, b.y_max);
        if design.solid_ground() {
            self.quad(
                [Vec3::new(-xh, 0.0, -zh), Vec3::new(xh, 0.0, -zh), Vec3::new(xh, 0.0, zh), Vec3::new(-xh, 0.0, zh)],
                GROUND,
            );
        }
        if design.back_plane() {
            self.quad(
                [Vec3::new(-xh, 0.0, zh), Vec3::new(xh, 0.0, zh), Vec3::new(xh, ym, zh), Vec3::new(-xh, ym, zh)],
                BACK_PLANE,
            );
        }
        if design == RenderDesign::GridRulers {
            for x in unit_steps(-xh, xh) {
                self.line(Vec3::new(x, 0.0, -zh), Vec3::new(x, 0.0, zh), GRID);
            }
            for z in unit_steps(-zh, zh) {
                self.line(Vec3::new(-xh, 0.0, z), Vec3::new(xh, 0.0, z), GRID);
            }
        }
        if design.rulers() {
            self.rulers(xh, zh, ym);
        }
    }

    fn rulers(&mut self, xh: f64, zh: f64, ym: f64) {
        let l = OVERLAY_LIFT;
        self.line(Vec3::new(-xh, l, 0.0), Vec3::new(xh, l, 0.0), RULER);
        self.line(Vec3::new(0.0, l, -zh), Vec3::new(0.0, l, zh), RULER);
        self.line(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, ym, 0.0), RULER);
        for x in unit_steps(-xh, xh) {
            self.line(Vec3::new(x, l, -TICK_HALF), Vec3::new(x, l, TICK_HALF), RULER);
            if x != 0.0 {
                self.label(Vec3::new(x, l, -3.0 * TICK_HALF), format_tick(x));
            }
        }
        for z in unit_steps(-zh, zh) {
            self.line(Vec3::new(-TICK_HALF, l, z), Vec3::new(TICK_HALF, l, z), RULER);
            if z != 0.0 {
                self.label(Vec3::new(3.0 * TICK_HALF, l, z), format_tick(z));
            }
        }
        for y in unit_steps(0.0, ym) {
            self.line(Vec3::new(-TICK_HALF, y, 0.0), Vec3::new(TICK_HALF, y, 0.0), RULER);
            self.label(Vec3::new(3.0 * TICK_HALF, y, 0.0), format_tick(y));
        }
    }

    fn subjects(&mut self, scene: &Scene) {
        let light = -scene.light_direction();
        let ambient = scene.ambient();
        for s in &scene.subjects {
            let Some(mesh) = s.world_mesh() else { continue };
            let id = (s.index + 1).min(u16::MAX as usize) as u16;
            for t in 0..mesh.triangles.len() {
                let [a, b, c] = mesh.triangle(t);
                let Some(mut n) = (b - a).cross(c - a).normalized() else { continue };
                if n.dot(self.basis.eye - a) < 0.0 {
                    n = -n;
                }
                let k = ambient + (1.0 - ambient) * n.dot(light).max(0.0);
                let color = s.color.rgb.map(|ch| (f64::from(ch) * k).round().clamp(0.0, 255.0) as u8);
                self.tri(a, b, c, color, id);
            }
        }
    }
}

fn unit_steps(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (lo.ceil() as i64..=hi.floor() as i64).map(|i| i as f64)
}

fn format_tick(v: f64) -> String {
    format!("{}", v as i64)
}

/// Renders the scene from `camera` with the chosen scaffolding.
///
/// Scaffolding is drawn first, then subjects in index order; the depth test
/// is strict, so earlier primitives win exact ties.
pub fn render(scene: &Scene, camera: &CameraSpec, design: RenderDesign) -> Result<RenderOutput, RenderError> {
    camera.validate()?;
    let basis = camera.basis();
    let mut builder =
        Builder { basis: &basis, prims: Vec::new(), line_half_width: (f64::from(camera.height) / 768.0).max(0.75) };
    builder.scaffolding(scene, design);
    builder.subjects(scene);
    let frame = raster::rasterize(&basis, camera.width as usize, camera.height as usize, BACKGROUND, &builder.prims);
    let color = RgbImage::from_raw(camera.width, camera.height, frame.color.iter().flatten().copied().collect())
        .expect("frame matches dimensions");
    let depth = frame.depth.iter().map(|&d| if d.is_finite() { d as f32 } else { 0.0 }).collect();
    Ok(RenderOutput { width: camera.width, height: camera.height, color, depth, subject_ids: frame.ids })
}

/// Named fitted cameras and their renders.
pub type ViewSet = Vec<(String, CameraSpec, RenderOutput)>;

fn render_views(
    scene: &Scene,
    dirs: &[(&str, [f64; 3])],
    design: RenderDesign,
    vfov_deg: f64,
    width: u32,
    height: u32,
) -> Result<ViewSet, RenderError> {
    dirs.iter()
        .map(|(name, d)| {
            let cam = camera::fit_camera(scene, Vec3::from(*d), vfov_deg, width, height)?;
            let out = render(scene, &cam, design)?;
            Ok((name.to_string(), cam, out))
        })
        .collect()
}

/// Front, left, right and top renders, each distance-fitted.
pub fn multiview_renders(
    scene: &Scene,
    design: RenderDesign,
    vfov_deg: f64,
    width: u32,
    height: u32,
) -> Result<ViewSet, RenderError> {
    render_views(scene, &camera::MULTIVIEW_DIRECTIONS, design, vfov_deg, width, height)
}

/// The five proposal renders, in proposal order.
pub fn proposal_renders(
    scene: &Scene,
    design: RenderDesign,
    vfov_deg: f64,
    width: u32,
    height: u32,
) -> Result<ViewSet, RenderError> {
    render_views(scene, &camera::PROPOSAL_DIRECTIONS, design, vfov_deg, width, height)
}
