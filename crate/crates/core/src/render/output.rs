//! Render results and their on-disk encodings.

use std::path::{Path, PathBuf};

use image::{GrayImage, ImageBuffer, Luma, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::RenderError;

/// Color, forward depth and subject-id planes of one render.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderOutput {
    pub width: u32,
    pub height: u32,
    pub color: RgbImage,
    /// Forward (z) depth in world units, row-major; 0 where nothing was hit.
    pub depth: Vec<f32>,
    /// 0 for background and scaffolding, otherwise subject index + 1.
    pub subject_ids: Vec<u16>,
}

impl RenderOutput {
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn depth_at(&self, x: u32, y: u32) -> f32 {
        self.depth[self.index(x, y)]
    }

    pub fn id_at(&self, x: u32, y: u32) -> u16 {
        self.subject_ids[self.index(x, y)]
    }

    pub fn sidecar(&self) -> DepthSidecar {
        DepthSidecar::describe(self.width, self.height, &self.depth)
    }
}

pub const DEPTH_CONVENTION: &str = "z-depth along the camera forward axis in world units; 0 = no hit";
pub const DEPTH_FORMAT: &str = "f32 little-endian, row-major, top row first";

/// JSON sidecar stored next to a raw `.depth` file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub width: u32,
    pub height: u32,
    pub min_valid: Option<f32>,
    pub max_valid: Option<f32>,
    pub format: String,
    pub convention: String,
}

impl DepthSidecar {
    pub fn describe(width: u32, height: u32, depth: &[f32]) -> Self {
        let (min_valid, max_valid) = valid_range(depth).map_or((None, None), |(a, b)| (Some(a), Some(b)));
        Self {
            width,
            height,
            min_valid,
            max_valid,
            format: DEPTH_FORMAT.into(),
            convention: DEPTH_CONVENTION.into(),
        }
    }
}

fn valid_range(depth: &[f32]) -> Option<(f32, f32)> {
    depth.iter().copied().filter(|d| *d > 0.0).fold(None, |acc, d| match acc {
        None => Some((d, d)),
        Some((lo, hi)) => Some((lo.min(d), hi.max(d))),
    })
}

pub fn encode_depth(depth: &[f32]) -> Vec<u8> {
    depth.iter().flat_map(|d| d.to_le_bytes()).collect()
}

pub fn decode_depth(bytes: &[u8], width: u32, height: u32) -> Result<Vec<f32>, RenderError> {
    let n = width as usize * height as usize;
    if bytes.len() != n * 4 {
        return Err(RenderError::Depth(format!("expected {} bytes for {width}x{height}, got {}", n * 4, bytes.len())));
    }
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

/// 8-bit preview: near is bright, far valid pixels stay above 32, invalid
/// pixels are black.
pub fn depth_preview(width: u32, height: u32, depth: &[f32]) -> GrayImage {
    let range = valid_range(depth);
    GrayImage::from_fn(width, height, |x, y| {
        let d = depth[y as usize * width as usize + x as usize];
        let v = match range {
            Some((lo, hi)) if d > 0.0 => {
                if hi > lo {
                    32.0 + 223.0 * f64::from(hi - d) / f64::from(hi - lo)
                } else {
                    255.0
                }
            }
            _ => 0.0,
        };
        Luma([v.round() as u8])
    })
}

pub fn id_image(width: u32, height: u32, ids: &[u16]) -> ImageBuffer<Luma<u16>, Vec<u16>> {
    ImageBuffer::from_raw(width, height, ids.to_vec()).expect("id plane matches dimensions")
}

/// Files produced by [`write_render`].
pub fn render_file_names(name: &str) -> [String; 5] {
    [
        format!("{name}.png"),
        format!("{name}.depth"),
        format!("{name}.depth.json"),
        format!("{name}.depth.png"),
        format!("{name}.ids.png"),
    ]
}

/// Writes `<name>.png`, `<name>.depth` (+ `.depth.json` sidecar and
/// `.depth.png` preview) and `<name>.ids.png` into `dir`.
pub fn write_render(output: &RenderOutput, dir: &Path, name: &str) -> Result<Vec<PathBuf>, RenderError> {
    std::fs::create_dir_all(dir)?;
    let [color, depth, sidecar, preview, ids] = render_file_names(name).map(|f| dir.join(f));
    output.color.save_with_format(&color, image::ImageFormat::Png)?;
    std::fs::write(&depth, encode_depth(&output.depth))?;
    let mut json = serde_json::to_vec_pretty(&output.sidecar()).expect("sidecar serializes");
    json.push(b'\n');
    std::fs::write(&sidecar, json)?;
    depth_preview(output.width, output.height, &output.depth).save_with_format(&preview, image::ImageFormat::Png)?;
    id_image(output.width, output.height, &output.subject_ids).save_with_format(&ids, image::ImageFormat::Png)?;
    Ok(vec![color, depth, sidecar, preview, ids])
}

/// Reads back a depth plane and its sidecar.
pub fn read_depth(dir: &Path, name: &str) -> Result<(DepthSidecar, Vec<f32>), RenderError> {
    let sidecar: DepthSidecar = serde_json::from_slice(&std::fs::read(dir.join(format!("{name}.depth.json")))?)
        .map_err(|e| RenderError::Depth(e.to_string()))?;
    let depth = decode_depth(&std::fs::read(dir.join(format!("{name}.depth")))?, sidecar.width, sidecar.height)?;
    Ok((sidecar, depth))
}
