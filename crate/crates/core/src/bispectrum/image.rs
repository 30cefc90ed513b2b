use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{bispectrum_fft, BispectrumGrid};
use crate::error::{Error, Result};
use crate::signal::IqSignal;

/// Row-major real grid of block powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerGrid {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

/// Row-major 8-bit intensity grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantGrid {
    pub height: usize,
    pub width: usize,
    pub values: Vec<u8>,
}

/// How block powers are mapped before 8-bit quantization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    #[default]
    Linear,
    /// `log10` of the power relative to a floor of 1e-10 of the image maximum.
    LogMagnitude,
}

/// Colorized feature image, pixels stored row-major with RGB interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BispectrumImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub source_emitter: Option<u32>,
}

impl BispectrumImage {
    pub const CHANNELS: usize = 3;

    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height * Self::CHANNELS {
            return Err(Error::invalid(format!(
                "{} bytes do not form a {width}x{height}x3 image",
                pixels.len()
            )));
        }
        Ok(BispectrumImage {
            width,
            height,
            pixels,
            source_emitter: None,
        })
    }

    pub fn rgb(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Sums `|B|²` over non-overlapping `block`×`block` tiles.
pub fn downsample_power(grid: &BispectrumGrid, block: usize) -> Result<PowerGrid> {
    let n = grid.n_points();
    if block == 0 || !n.is_multiple_of(block) {
        return Err(Error::invalid(format!(
            "grid side {n}x{n} is not divisible by block {block}"
        )));
    }
    let side = n / block;
    let mut values = vec![0.0; side * side];
    for (k1, row) in grid.values().chunks_exact(n).enumerate() {
        let out = &mut values[(k1 / block) * side..(k1 / block + 1) * side];
        for (k2, v) in row.iter().enumerate() {
            out[k2 / block] += v.norm_sqr();
        }
    }
    Ok(PowerGrid {
        height: side,
        width: side,
        values,
    })
}

/// Per-image min–max map to 0..=255 with half-away-from-zero rounding.
/// A constant grid maps to all zeros.
pub fn quantize_rescale(power: &PowerGrid) -> Result<QuantGrid> {
    if power.values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("power grid contains NaN"));
    }
    if power.values.iter().any(|v| v.is_infinite() || *v < 0.0) {
        return Err(Error::invalid("power grid must be finite and non-negative"));
    }
    let (lo, hi) = power
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let values = if power.values.is_empty() || hi == lo {
        vec![0; power.values.len()]
    } else {
        let range = hi - lo;
        power
            .values
            .iter()
            .map(|&v| (255.0 * (v - lo) / range).round().clamp(0.0, 255.0) as u8)
            .collect()
    };
    Ok(QuantGrid {
        height: power.height,
        width: power.width,
        values,
    })
}

/// Piecewise-linear "jet" colormap: red, green and blue peak at high,
/// medium and low intensity respectively.
///
/// Evaluated in units of 1/255 so every intermediate is an exact multiple
/// of one half.
pub fn jet_rgb(q: u8) -> [u8; 3] {
    const OFFSETS: [(f64, f64); 3] = [(-1.5, 4.5), (-0.5, 3.5), (0.5, 2.5)];
    let q4 = 4.0 * q as f64;
    OFFSETS.map(|(lo, hi)| {
        let rise = q4 + lo * 255.0;
        let fall = -q4 + hi * 255.0;
        rise.min(fall).clamp(0.0, 255.0).round() as u8
    })
}

pub fn apply_colormap(q: &QuantGrid) -> BispectrumImage {
    let pixels = q.values.iter().flat_map(|&v| jet_rgb(v)).collect();
    BispectrumImage {
        width: q.width,
        height: q.height,
        pixels,
        source_emitter: None,
    }
}

fn rescale_log(power: &mut PowerGrid) {
    let hi = power.values.iter().copied().fold(0.0, f64::max);
    if hi > 0.0 {
        let floor = hi * 1e-10;
        power
            .values
            .iter_mut()
            .for_each(|v| *v = (v.max(floor) / floor).log10());
    }
}

/// Bispectrum → block power → 8-bit → colormap. A 1120-point sample with
/// block 5 gives the 224×224×3 image.
pub fn featurize(sample: &IqSignal, block: usize, scaling: Scaling) -> Result<BispectrumImage> {
    let grid = bispectrum_fft(sample)?;
    let mut power = downsample_power(&grid, block)?;
    if scaling == Scaling::LogMagnitude {
        rescale_log(&mut power);
    }
    let mut image = apply_colormap(&quantize_rescale(&power)?);
    image.source_emitter = sample.emitter_id;
    Ok(image)
}

const BSP_MAGIC: &[u8; 4] = b"BSP1";

/// Serializes an image in the `BSP1` feature format: a 12-byte header
/// (magic, u16 width, u16 height, u16 channels, u16 reserved; little-endian)
/// followed by the interleaved pixels.
pub fn encode_bsp(image: &BispectrumImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + image.pixels.len());
    out.extend_from_slice(BSP_MAGIC);
    out.extend_from_slice(&(image.width as u16).to_le_bytes());
    out.extend_from_slice(&(image.height as u16).to_le_bytes());
    out.extend_from_slice(&(BispectrumImage::CHANNELS as u16).to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&image.pixels);
    out
}

pub fn decode_bsp(bytes: &[u8]) -> std::result::Result<BispectrumImage, String> {
    if bytes.len() < 12 || &bytes[0..4] != BSP_MAGIC {
        return Err("missing BSP1 header".into());
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]) as usize;
    let (w, h, c) = (u16_at(4), u16_at(6), u16_at(8));
    if c != BispectrumImage::CHANNELS {
        return Err(format!("expected 3 channels, header says {c}"));
    }
    if bytes.len() != 12 + w * h * c {
        return Err(format!(
            "header declares {w}x{h}x{c} but payload has {} bytes",
            bytes.len() - 12
        ));
    }
    Ok(BispectrumImage {
        width: w,
        height: h,
        pixels: bytes[12..].to_vec(),
        source_emitter: None,
    })
}

pub fn write_bsp(path: &Path, image: &BispectrumImage) -> Result<()> {
    fs::write(path, encode_bsp(image)).map_err(|e| Error::io(path, e))
}

pub fn read_bsp(path: &Path) -> Result<BispectrumImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bsp(&bytes).map_err(|r| Error::format(path, r))
}

/// PNG export of the same pixels.
pub fn write_png(path: &Path, image: &BispectrumImage) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(
        BufWriter::new(file),
        image.width as u32,
        image.height as u32,
    );
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let to_err = |e: png::EncodingError| Error::format(path, e.to_string());
    let mut w = enc.write_header().map_err(to_err)?;
    w.write_image_data(&image.pixels).map_err(to_err)?;
    w.finish().map_err(to_err)
}
