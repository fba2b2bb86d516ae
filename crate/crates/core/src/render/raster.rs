//! Z-buffered rasterization of triangles, thick lines and glyph quads in
//! camera space.
//!
//! The frame is split into horizontal bands that are rasterized
//! independently; each band walks the full primitive list in draw order, so
//! the output does not depend on how bands are scheduled.

use rayon::prelude::*;

use super::camera::ViewBasis;
use super::font;
use crate::Vec3;

/// Nearest camera-space depth kept after clipping.
pub const NEAR: f64 = 1e-4;
/// Relative depth slack granted to lines and labels so they stay visible on
/// the surfaces they are drawn over.
pub const OVERLAY_DEPTH_BIAS: f64 = 1e-2;
const BAND_ROWS: usize = 16;

#[derive(Clone, Debug)]
pub enum Primitive {
    /// Camera-space triangle.
    Triangle { verts: [Vec3; 3], color: [u8; 3], id: u16 },
    /// Camera-space segment drawn `half_width` pixels to each side.
    Line { a: Vec3, b: Vec3, color: [u8; 3], half_width: f64 },
    /// Text on a quad parallel to the image plane. `origin` is the
    /// camera-space bottom-left corner; `cell` is the world size of one font
    /// pixel.
    Label { origin: Vec3, cell: f64, text: String, color: [u8; 3] },
}

/// Primitive after projection to pixel space.
enum Screen {
    Tri { p: [(f64, f64); 3], inv_z: [f64; 3], area: f64, color: [u8; 3], id: u16, ymin: f64, ymax: f64 },
    Line { a: (f64, f64), b: (f64, f64), inv_z: [f64; 2], color: [u8; 3], half_width: f64, ymin: f64, ymax: f64 },
    Label { x0: f64, y0: f64, px: f64, depth: f64, text: Vec<char>, color: [u8; 3], ymin: f64, ymax: f64 },
}

impl Screen {
    fn rows(&self) -> (f64, f64) {
        match *self {
            Screen::Tri { ymin, ymax, .. } | Screen::Line { ymin, ymax, .. } | Screen::Label { ymin, ymax, .. } => {
                (ymin, ymax)
            }
        }
    }
}

pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub color: Vec<[u8; 3]>,
    pub depth: Vec<f64>,
    pub ids: Vec<u16>,
}

/// Clips a camera-space polygon to `z >= NEAR`.
fn clip_near(poly: &[Vec3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ina, inb) = (a.z >= NEAR, b.z >= NEAR);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (NEAR - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * t;
            p.z = NEAR;
            out.push(p);
        }
    }
    out
}

fn project(basis: &ViewBasis, c: Vec3) -> (f64, f64) {
    basis.camera_to_pixel(c)
}

fn to_screen(basis: &ViewBasis, prims: &[Primitive]) -> Vec<Screen> {
    let mut out = Vec::with_capacity(prims.len());
    for prim in prims {
        match prim {
            Primitive::Triangle { verts, color, id } => {
                let clipped = clip_near(verts);
                if clipped.len() < 3 {
                    continue;
                }
                for k in 1..clipped.len() - 1 {
                    let tri = [clipped[0], clipped[k], clipped[k + 1]];
                    let mut p = tri.map(|v| project(basis, v));
                    let mut inv_z = tri.map(|v| 1.0 / v.z);
                    let mut area = edge(p[0], p[1], p[2]);
                    if area == 0.0 || !area.is_finite() {
                        continue;
                    }
                    if area < 0.0 {
                        p.swap(1, 2);
                        inv_z.swap(1, 2);
                        area = -area;
                    }
                    let ymin = p.iter().map(|q| q.1).fold(f64::MAX, f64::min);
                    let ymax = p.iter().map(|q| q.1).fold(f64::MIN, f64::max);
                    out.push(Screen::Tri { p, inv_z, area, color: *color, id: *id, ymin, ymax });
                }
            }
            Primitive::Line { a, b, color, half_width } => {
                let (mut a, mut b) = (*a, *b);
                if a.z < NEAR && b.z < NEAR {
                    continue;
                }
                if a.z < NEAR || b.z < NEAR {
                    let t = (NEAR - a.z) / (b.z - a.z);
                    let p = a + (b - a) * t;
                    if a.z < NEAR {
                        a = p;
                    } else {
                        b = p;
                    }
                }
                let (pa, pb) = (project(basis, a), project(basis, b));
                out.push(Screen::Line {
                    a: pa,
                    b: pb,
                    inv_z: [1.0 / a.z, 1.0 / b.z],
                    color: *color,
                    half_width: *half_width,
                    ymin: pa.1.min(pb.1) - half_width,
                    ymax: pa.1.max(pb.1) + half_width,
                });
            }
            Primitive::Label { origin, cell, text, color } => {
                if origin.z < NEAR {
                    continue;
                }
                let (x0, y0) = project(basis, *origin);
                let px = basis.focal * cell / origin.z;
                let rows = font::GLYPH_H as f64 * px;
                out.push(Screen::Label {
                    x0,
                    y0,
                    px,
                    depth: origin.z,
                    text: text.chars().collect(),
                    color: *color,
                    ymin: y0 - rows,
                    ymax: y0,
                });
            }
        }
    }
    out
}

#[inline]
fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Top-left rule for a positive-area triangle in y-down pixel space (edges
/// run left to right along the top): an edge owns the pixels exactly on it
/// when it is a top edge or a left edge.
#[inline]
fn owns_boundary(a: (f64, f64), b: (f64, f64)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

struct Band<'a> {
    y0: usize,
    width: usize,
    color: &'a mut [[u8; 3]],
    depth: &'a mut [f64],
    ids: &'a mut [u16],
}

impl Band<'_> {
    fn rows(&self) -> usize {
        self.depth.len() / self.width
    }

    #[inline]
    fn write(&mut self, x: usize, y: usize, z: f64, color: [u8; 3], id: u16, bias: f64) {
        let i = (y - self.y0) * self.width + x;
        if z * (1.0 - bias) < self.depth[i] {
            self.depth[i] = z;
            self.color[i] = color;
            self.ids[i] = id;
        }
    }

    fn span(&self, lo: f64, hi: f64, height: usize) -> Option<(usize, usize)> {
        let band_lo = self.y0;
        let band_hi = (self.y0 + self.rows()).min(height);
        let a = (lo - 0.5).ceil().max(band_lo as f64);
        let b = (hi - 0.5).floor().min(band_hi as f64 - 1.0);
        if a > b {
            None
        } else {
            Some((a as usize, b as usize))
        }
    }

    fn raster(&mut self, s: &Screen, height: usize) {
        let (ymin, ymax) = s.rows();
        let Some((r0, r1)) = self.span(ymin, ymax, height) else { return };
        match s {
            Screen::Tri { p, inv_z, area, color, id, .. } => {
                let xmin = p.iter().map(|q| q.0).fold(f64::MAX, f64::min);
                let xmax = p.iter().map(|q| q.0).fold(f64::MIN, f64::max);
                let c0 = (xmin - 0.5).ceil().max(0.0);
                let c1 = (xmax - 0.5).floor().min(self.width as f64 - 1.0);
                if c0 > c1 {
                    return;
                }
                let own = [owns_boundary(p[1], p[2]), owns_boundary(p[2], p[0]), owns_boundary(p[0], p[1])];
                for y in r0..=r1 {
                    let py = y as f64 + 0.5;
                    for x in c0 as usize..=c1 as usize {
                        let q = (x as f64 + 0.5, py);
                        let w = [edge(p[1], p[2], q), edge(p[2], p[0], q), edge(p[0], p[1], q)];
                        if (0..3).any(|k| w[k] < 0.0 || (w[k] == 0.0 && !own[k])) {
                            continue;
                        }
                        let iz = (w[0] * inv_z[0] + w[1] * inv_z[1] + w[2] * inv_z[2]) / area;
                        self.write(x, y, 1.0 / iz, *color, *id, 0.0);
                    }
                }
            }
            Screen::Line { a, b, inv_z, color, half_width, .. } => {
                let c0 = (a.0.min(b.0) - half_width - 0.5).ceil().max(0.0);
                let c1 = (a.0.max(b.0) + half_width - 0.5).floor().min(self.width as f64 - 1.0);
                if c0 > c1 {
                    return;
                }
                let d = (b.0 - a.0, b.1 - a.1);
                let len2 = d.0 * d.0 + d.1 * d.1;
                for y in r0..=r1 {
                    for x in c0 as usize..=c1 as usize {
                        let q = (x as f64 + 0.5 - a.0, y as f64 + 0.5 - a.1);
                        let t = if len2 > 0.0 { ((q.0 * d.0 + q.1 * d.1) / len2).clamp(0.0, 1.0) } else { 0.0 };
                        let (ex, ey) = (q.0 - t * d.0, q.1 - t * d.1);
                        if ex * ex + ey * ey > half_width * half_width {
                            continue;
                        }
                        let iz = inv_z[0] + t * (inv_z[1] - inv_z[0]);
                        self.write(x, y, 1.0 / iz, *color, 0, OVERLAY_DEPTH_BIAS);
                    }
                }
            }
            Screen::Label { x0, y0, px, depth, text, color, .. } => {
                let advance = (font::GLYPH_W + 1) as f64 * px;
                let x_end = x0 + advance * text.len() as f64;
                let c0 = (x0 - 0.5).ceil().max(0.0);
                let c1 = (x_end - 0.5).floor().min(self.width as f64 - 1.0);
                if c0 > c1 || *px <= 0.0 {
                    return;
                }
                let top = y0 - font::GLYPH_H as f64 * px;
                for y in r0..=r1 {
                    let row = ((y as f64 + 0.5 - top) / px).floor();
                    if row < 0.0 || row >= font::GLYPH_H as f64 {
                        continue;
                    }
                    for x in c0 as usize..=c1 as usize {
                        let local = x as f64 + 0.5 - x0;
                        let slot = (local / advance).floor();
                        if slot < 0.0 || slot as usize >= text.len() {
                            continue;
                        }
                        let col = ((local - slot * advance) / px).floor() as usize;
                        if font::lit(text[slot as usize], col, row as usize) {
                            self.write(x, y, *depth, *color, 0, OVERLAY_DEPTH_BIAS);
                        }
                    }
                }
            }
        }
    }
}

/// Rasterizes camera-space primitives in order into a fresh frame.
pub fn rasterize(basis: &ViewBasis, width: usize, height: usize, background: [u8; 3], prims: &[Primitive]) -> Frame {
    let screen = to_screen(basis, prims);
    let mut frame = Frame {
        width,
        height,
        color: vec![background; width * height],
        depth: vec![f64::INFINITY; width * height],
        ids: vec![0; width * height],
    };
    let chunk = BAND_ROWS * width;
    frame
        .color
        .par_chunks_mut(chunk)
        .zip(frame.depth.par_chunks_mut(chunk))
        .zip(frame.ids.par_chunks_mut(chunk))
        .enumerate()
        .for_each(|(i, ((color, depth), ids))| {
            let mut band = Band { y0: i * BAND_ROWS, width, color, depth, ids };
            for s in &screen {
                band.raster(s, height);
            }
        });
    frame
}
