use std::io::Cursor;
use std::path::Path;

use avatar_core::fsutil;
use avatar_core::losses::Frame;
use avatar_core::render::RenderOutput;
use avatar_core::{Error, Result};
use image::{ImageFormat, RgbaImage};

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Straight-alpha RGBA bytes of a render. Colors come out of the integrator
/// premultiplied, so they are divided by the opacity.
pub fn render_rgba(out: &RenderOutput) -> Vec<u8> {
    out.color
        .iter()
        .zip(&out.opacity)
        .flat_map(|(c, &a)| {
            let inv = if a > 0.0 { 1.0 / a } else { 0.0 };
            [to_byte(c[0] * inv), to_byte(c[1] * inv), to_byte(c[2] * inv), to_byte(a)]
        })
        .collect()
}

pub fn encode_png(width: usize, height: usize, rgba: Vec<u8>) -> Result<Vec<u8>> {
    let img = RgbaImage::from_raw(width as u32, height as u32, rgba)
        .ok_or_else(|| Error::InvalidArgument("pixel buffer does not match the image size".into()))?;
    let mut bytes = Vec::new();
    img.write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .map_err(|e| Error::InvalidArgument(format!("png encoding failed: {e}")))?;
    Ok(bytes)
}

pub fn write_png(path: &Path, width: usize, height: usize, rgba: Vec<u8>) -> Result<()> {
    fsutil::write_atomic(path, &encode_png(width, height, rgba)?)
}

/// Loads an image as a loss frame with channels in `[0, 1]`; images
/// without alpha count as fully opaque.
pub fn read_frame(path: &Path) -> Result<Frame> {
    let bytes = fsutil::read_bytes(path)?;
    let img = image::load_from_memory(&bytes)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?
        .to_rgba8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let px = img.pixels();
    let color = px.clone().map(|p| [0, 1, 2].map(|k| p.0[k] as f64 / 255.0)).collect();
    let alpha = px.map(|p| p.0[3] as f64 / 255.0).collect();
    Frame::new(w, h, color, alpha)
}
