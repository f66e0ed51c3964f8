//! Portable float map (PFM) reading and writing.
//!
//! `Pf` is one float per pixel, `PF` three. Rows are stored bottom-to-top as
//! the format prescribes. Files written here always use scale `-1.0`
//! (little-endian); the reader accepts either byte order.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::raster::{Mask, NormalMap, Plane};
use crate::{Error, Result};

/// Norm below which a stored normal counts as the invalid-pixel marker.
const INVALID_NORMAL_NORM: f64 = 0.5;

fn pfm_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Pfm {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct PfmHeader {
    color: bool,
    width: usize,
    height: usize,
    little_endian: bool,
    data_offset: usize,
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<PfmHeader> {
    let mut pos = 0usize;
    let mut token = |what: &str| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(pfm_error(path, format!("truncated header, missing {what}")));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = token("magic")?;
    let color = match magic.as_str() {
        "Pf" => false,
        "PF" => true,
        other => return Err(pfm_error(path, format!("not a PFM file (magic {other:?})"))),
    };
    let width: usize = token("width")?
        .parse()
        .map_err(|_| pfm_error(path, "bad width"))?;
    let height: usize = token("height")?
        .parse()
        .map_err(|_| pfm_error(path, "bad height"))?;
    let scale: f64 = token("scale")?
        .parse()
        .map_err(|_| pfm_error(path, "bad scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(pfm_error(path, format!("bad scale {scale}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(pfm_error(path, "missing separator before raster data"));
    }
    pos += 1;
    Ok(PfmHeader {
        color,
        width,
        height,
        little_endian: scale < 0.0,
        data_offset: pos,
    })
}

fn read_samples(path: &Path, expect_color: bool) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    let header = parse_header(path, &bytes)?;
    if header.color != expect_color {
        let (want, got) = if expect_color {
            ("PF (3-channel)", "Pf")
        } else {
            ("Pf (1-channel)", "PF")
        };
        return Err(pfm_error(path, format!("expected {want}, found {got}")));
    }
    let channels = if header.color { 3 } else { 1 };
    let count = header
        .width
        .checked_mul(header.height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| pfm_error(path, "image dimensions overflow"))?;
    let data = &bytes[header.data_offset..];
    if data.len() < count * 4 {
        return Err(pfm_error(
            path,
            format!("raster truncated: need {} bytes, have {}", count * 4, data.len()),
        ));
    }

    // Flip bottom-to-top storage back into top-down row order.
    let row_floats = header.width * channels;
    let mut samples = vec![0.0f64; count];
    for file_row in 0..header.height {
        let image_row = header.height - 1 - file_row;
        let src = &data[file_row * row_floats * 4..(file_row + 1) * row_floats * 4];
        let dst = &mut samples[image_row * row_floats..(image_row + 1) * row_floats];
        for (chunk, out) in src.chunks_exact(4).zip(dst.iter_mut()) {
            let raw: [u8; 4] = chunk.try_into().unwrap();
            let v = if header.little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            *out = v as f64;
        }
    }
    Ok((header.width, header.height, samples))
}

fn write_samples(path: &Path, color: bool, width: usize, height: usize, samples: &[f64]) -> Result<()> {
    let channels = if color { 3 } else { 1 };
    debug_assert_eq!(samples.len(), width * height * channels);
    let magic = if color { "PF" } else { "Pf" };
    let mut bytes = format!("{magic}\n{width} {height}\n-1.0\n").into_bytes();
    bytes.reserve(samples.len() * 4);
    let row_floats = width * channels;
    for image_row in (0..height).rev() {
        for v in &samples[image_row * row_floats..(image_row + 1) * row_floats] {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

pub fn read_pfm_gray(path: impl AsRef<Path>) -> Result<Plane> {
    let path = path.as_ref();
    let (width, height, samples) = read_samples(path, false)?;
    Plane::from_vec(width, height, samples)
}

pub fn write_pfm_gray(path: impl AsRef<Path>, plane: &Plane) -> Result<()> {
    write_samples(path.as_ref(), false, plane.width(), plane.height(), plane.data())
}

/// Reads a 3-channel PFM as a normal map; pixels stored as (near-)zero
/// vectors come back invalid.
pub fn read_pfm_normals(path: impl AsRef<Path>) -> Result<NormalMap> {
    let path = path.as_ref();
    let (width, height, samples) = read_samples(path, true)?;
    let mut normals = Vec::with_capacity(width * height);
    let mut mask = Mask::new(width, height);
    for (i, triple) in samples.chunks_exact(3).enumerate() {
        let v = Vector3::new(triple[0], triple[1], triple[2]);
        if v.norm() > INVALID_NORMAL_NORM {
            mask.set(i % width, i / width, true);
        }
        normals.push(v);
    }
    NormalMap::from_parts(width, height, normals, mask)
}

/// Writes a normal map as 3-channel PFM; invalid pixels become zero vectors.
pub fn write_pfm_normals(path: impl AsRef<Path>, normals: &NormalMap) -> Result<()> {
    let (width, height) = normals.dims();
    let mut samples = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let v = if normals.is_valid(x, y) {
                normals.get(x, y)
            } else {
                Vector3::zeros()
            };
            samples.extend_from_slice(&[v.x, v.y, v.z]);
        }
    }
    write_samples(path.as_ref(), true, width, height, &samples)
}
