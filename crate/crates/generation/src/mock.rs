//! Deterministic stand-ins for the generative models. Every function here is
//! a pure function of its arguments.

use image::{GrayImage, Rgb, RgbImage};
use scratchpad_core::render::font::{lit, GLYPH_H, GLYPH_W};
use scratchpad_core::{cylinder, icosphere, unit_cube, TriMesh};
use sha2::{Digest, Sha256};

use crate::backend::{check_mask, ComposeRequest, Compositor, ImageTo3D, Removal, TextToImage};
use crate::error::GenerationError;

pub const IDENTITY_SIZE: u32 = 256;
pub const GLYPH_CHARS: usize = 12;
const GLYPH_SCALE: u32 = 3;
/// Fill used by [`mock_remove`] when the mask leaves no ring to sample.
pub const EMPTY_RING_FILL: [u8; 3] = [128, 128, 128];

/// Pastel color from the SHA-256 of `text`: each channel is
/// `160 + digest[i] % 96` for the first three digest bytes.
pub fn pastel(text: &str) -> [u8; 3] {
    let d = Sha256::digest(text.as_bytes());
    [160 + d[0] % 96, 160 + d[1] % 96, 160 + d[2] % 96]
}

fn ink(prompt: &str, seed: u64) -> [u8; 3] {
    let mut h = Sha256::new();
    h.update(prompt.as_bytes());
    h.update(seed.to_le_bytes());
    let d = h.finalize();
    [20 + d[0] % 80, 20 + d[1] % 80, 20 + d[2] % 80]
}

/// Pastel background from the prompt with the prompt's first twelve
/// characters drawn as a centered glyph block.
pub fn mock_text_to_image(prompt: &str, seed: u64) -> Result<RgbImage, GenerationError> {
    if prompt.trim().is_empty() {
        return Err(GenerationError::EmptyPrompt);
    }
    let mut img = RgbImage::from_pixel(IDENTITY_SIZE, IDENTITY_SIZE, Rgb(pastel(prompt)));
    let chars: Vec<char> = prompt.chars().take(GLYPH_CHARS).collect();
    let cell = (GLYPH_W as u32 + 1) * GLYPH_SCALE;
    let block_w = cell * chars.len() as u32 - GLYPH_SCALE;
    let block_h = GLYPH_H as u32 * GLYPH_SCALE;
    let (x0, y0) = ((IDENTITY_SIZE - block_w) / 2, (IDENTITY_SIZE - block_h) / 2);
    let color = Rgb(ink(prompt, seed));
    for (i, &c) in chars.iter().enumerate() {
        for row in 0..GLYPH_H {
            for col in 0..GLYPH_W {
                if !lit(c, col, row) {
                    continue;
                }
                for dy in 0..GLYPH_SCALE {
                    for dx in 0..GLYPH_SCALE {
                        let x = x0 + i as u32 * cell + col as u32 * GLYPH_SCALE + dx;
                        let y = y0 + row as u32 * GLYPH_SCALE + dy;
                        img.put_pixel(x, y, color);
                    }
                }
            }
        }
    }
    Ok(img)
}

/// Keyword-dispatched primitive: round things become spheres, tall things
/// cylinders of extents (1, 3, 1), everything else a unit cube.
pub fn mock_image_to_3d(_image: &RgbImage, prompt: &str) -> Result<TriMesh, GenerationError> {
    let p = prompt.to_lowercase();
    let has = |words: &[&str]| words.iter().any(|w| p.contains(w));
    Ok(if has(&["ball", "sphere", "orange", "apple"]) {
        icosphere("icosphere", 0.5, 2)
    } else if has(&["bottle", "tree", "tower"]) {
        cylinder("cylinder", 0.5, 3.0, 24)
    } else {
        unit_cube()
    })
}

/// Subject that paints pixel `(x, y)`: among subjects whose rect covers it,
/// the one the id map shows there, else the nearest by mean rect depth,
/// ties broken by index.
fn owners(req: &ComposeRequest) -> Vec<Option<usize>> {
    let (w, h) = (req.width as usize, req.height as usize);
    let mean_depth: Vec<f64> = req
        .subjects
        .iter()
        .map(|s| {
            let r = s.rect.clamp(req.width, req.height);
            let (mut sum, mut n, mut any_sum, mut any_n) = (0.0, 0u64, 0.0, 0u64);
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    let i = y as usize * w + x as usize;
                    let d = req.depth[i] as f64;
                    if d > 0.0 {
                        any_sum += d;
                        any_n += 1;
                        if req.ids.get(i) == Some(&(s.index as u16 + 1)) {
                            sum += d;
                            n += 1;
                        }
                    }
                }
            }
            if n > 0 {
                sum / n as f64
            } else if any_n > 0 {
                any_sum / any_n as f64
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..req.subjects.len()).collect();
    order.sort_by(|&a, &b| {
        mean_depth[a].total_cmp(&mean_depth[b]).then(req.subjects[a].index.cmp(&req.subjects[b].index))
    });
    let mut out = vec![None; w * h];
    for (y, row) in out.chunks_mut(w).enumerate() {
        for (x, slot) in row.iter_mut().enumerate() {
            let covering = |k: &usize| req.subjects[*k].rect.contains(x as i64, y as i64);
            let id = req.ids.get(y * w + x).copied().unwrap_or(0);
            *slot = order
                .iter()
                .copied()
                .filter(covering)
                .find(|&k| id != 0 && req.subjects[k].index as u16 + 1 == id)
                .or_else(|| order.iter().copied().find(covering));
        }
    }
    out
}

/// Background from the enhanced prompt, identity images resized (nearest)
/// into their rects, overlaps resolved by depth.
pub fn mock_compose(req: &ComposeRequest) -> Result<RgbImage, GenerationError> {
    req.validate()?;
    let bg = Rgb(pastel(&req.enhanced_prompt));
    let owner = owners(req);
    let w = req.width as usize;
    Ok(RgbImage::from_fn(req.width, req.height, |x, y| match owner[y as usize * w + x as usize] {
        None => bg,
        Some(k) => {
            let s = &req.subjects[k];
            let (rw, rh) = (s.rect.width() as u64, s.rect.height() as u64);
            let (iw, ih) = (s.identity.width() as u64, s.identity.height() as u64);
            let sx = ((x as i64 - s.rect.x0) as u64 * iw / rw).min(iw - 1);
            let sy = ((y as i64 - s.rect.y0) as u64 * ih / rh).min(ih - 1);
            *s.identity.get_pixel(sx as u32, sy as u32)
        }
    }))
}

/// Base outside the mask, [`mock_compose`] inside it.
pub fn mock_recompose(base: &RgbImage, mask: &GrayImage, req: &ComposeRequest) -> Result<RgbImage, GenerationError> {
    check_mask(base, mask)?;
    if base.dimensions() != (req.width, req.height) {
        return Err(GenerationError::InvalidInput("base image and conditioning differ in size".into()));
    }
    let fresh = mock_compose(req)?;
    let mut out = base.clone();
    for (x, y, m) in mask.enumerate_pixels() {
        if m.0[0] != 0 {
            out.put_pixel(x, y, *fresh.get_pixel(x, y));
        }
    }
    Ok(out)
}

/// Replaces masked pixels with the per-channel lower median of the ring of
/// unmasked pixels within 2 px (Chebyshev) of the mask.
pub fn mock_remove(image: &RgbImage, mask: &GrayImage) -> Result<RgbImage, GenerationError> {
    check_mask(image, mask)?;
    let (w, h) = image.dimensions();
    let masked = |x: i64, y: i64| x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && mask.get_pixel(x as u32, y as u32).0[0] != 0;
    let mut channels: [Vec<u8>; 3] = Default::default();
    let mut any = false;
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if masked(x, y) {
                any = true;
                continue;
            }
            let near = (-2..=2).any(|dy| (-2..=2).any(|dx| masked(x + dx, y + dy)));
            if near {
                let p = image.get_pixel(x as u32, y as u32).0;
                for c in 0..3 {
                    channels[c].push(p[c]);
                }
            }
        }
    }
    if !any {
        return Ok(image.clone());
    }
    let fill = if channels[0].is_empty() {
        EMPTY_RING_FILL
    } else {
        let mut f = [0u8; 3];
        for c in 0..3 {
            channels[c].sort_unstable();
            f[c] = channels[c][(channels[c].len() - 1) / 2];
        }
        f
    };
    let mut out = image.clone();
    for (x, y, m) in mask.enumerate_pixels() {
        if m.0[0] != 0 {
            out.put_pixel(x, y, Rgb(fill));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MockTextToImage;

impl TextToImage for MockTextToImage {
    fn name(&self) -> &str {
        "mock"
    }
    fn generate(&self, prompt: &str, seed: u64) -> Result<RgbImage, GenerationError> {
        mock_text_to_image(prompt, seed)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MockImageTo3D;

impl ImageTo3D for MockImageTo3D {
    fn name(&self) -> &str {
        "mock"
    }
    fn reconstruct(&self, image: &RgbImage, prompt: &str) -> Result<TriMesh, GenerationError> {
        mock_image_to_3d(image, prompt)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MockCompositor;

impl Compositor for MockCompositor {
    fn name(&self) -> &str {
        "mock"
    }
    fn compose(&self, request: &ComposeRequest) -> Result<RgbImage, GenerationError> {
        mock_compose(request)
    }
    fn recompose(&self, base: &RgbImage, mask: &GrayImage, request: &ComposeRequest) -> Result<RgbImage, GenerationError> {
        mock_recompose(base, mask, request)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MockRemoval;

impl Removal for MockRemoval {
    fn name(&self) -> &str {
        "mock"
    }
    fn remove(&self, image: &RgbImage, mask: &GrayImage) -> Result<RgbImage, GenerationError> {
        mock_remove(image, mask)
    }
}
