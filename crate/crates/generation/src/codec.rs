use std::io::Cursor;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::GenerationError;

pub fn encode_png(image: &RgbImage) -> Vec<u8> {
    let mut out = Vec::new();
    image.write_to(&mut Cursor::new(&mut out), ImageFormat::Png).expect("in-memory PNG encoding");
    out
}

pub fn encode_mask_png(mask: &GrayImage) -> Vec<u8> {
    let mut out = Vec::new();
    mask.write_to(&mut Cursor::new(&mut out), ImageFormat::Png).expect("in-memory PNG encoding");
    out
}

pub fn decode_png(bytes: &[u8]) -> Result<RgbImage, GenerationError> {
    Ok(image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgb8())
}

pub fn decode_mask_png(bytes: &[u8]) -> Result<GrayImage, GenerationError> {
    Ok(match image::load_from_memory_with_format(bytes, ImageFormat::Png)? {
        DynamicImage::ImageLuma8(m) => m,
        other => other.to_luma8(),
    })
}
