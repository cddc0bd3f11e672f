//! Image exports: binary PPM for color, PGM for the validity mask, and raw
//! little-endian float32 grids with a JSON header for everything else.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MultiChannelImage, CHANNEL_NAMES};
use crate::error::Result;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloatGridHeader {
    pub width: usize,
    pub height: usize,
    pub channel: String,
    pub dtype: String,
}

impl FloatGridHeader {
    pub fn new(width: usize, height: usize, channel: &str) -> Self {
        Self {
            width,
            height,
            channel: channel.to_string(),
            dtype: "f32le".to_string(),
        }
    }
}

fn to_byte<T: Real>(c: T) -> u8 {
    (c.to_f64_lossy() * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn encode_rgb_ppm<T: Real>(img: &MultiChannelImage<T>) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.texels.len() * 3);
    for t in &img.texels {
        out.extend(t.rgb.iter().map(|&c| to_byte(c)));
    }
    out
}

pub fn encode_mask_pgm<T: Real>(img: &MultiChannelImage<T>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.valid.iter().map(|&v| if v { 255u8 } else { 0 }));
    out
}

pub fn encode_f32le<T: Real>(values: &[T]) -> Vec<u8> {
    values
        .iter()
        .flat_map(|v| v.to_f32().unwrap_or(f32::NAN).to_le_bytes())
        .collect()
}

/// Writes `<stem>.json` (header) and `<stem>.f32` (data) into `dir`.
pub fn write_float_grid<T: Real>(dir: &Path, stem: &str, header: &FloatGridHeader, values: &[T]) -> Result<()> {
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(header)?)?;
    fs::write(dir.join(format!("{stem}.f32")), encode_f32le(values))?;
    Ok(())
}

/// Exports every channel of `img` under `prefix` into `dir`.
pub fn write_image_set<T: Real>(dir: &Path, prefix: &str, img: &MultiChannelImage<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{prefix}_rgb.ppm")), encode_rgb_ppm(img))?;
    fs::write(dir.join(format!("{prefix}_mask.pgm")), encode_mask_pgm(img))?;
    for (c, name) in CHANNEL_NAMES.iter().enumerate().skip(3) {
        let header = FloatGridHeader::new(img.width, img.height, name);
        write_float_grid(dir, &format!("{prefix}_{name}"), &header, &img.channel(c))?;
    }
    fs::write(
        dir.join(format!("{prefix}_pose.json")),
        serde_json::to_vec_pretty(&img.pose)?,
    )?;
    Ok(())
}
