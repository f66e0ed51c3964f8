//! Grayscale PNG ingestion and emission.
//!
//! Intensities are normalized to `[0, 1]` on read (by 255 or 65535 depending
//! on bit depth) and written as 16-bit. Masks are 8-bit, 0 = invalid,
//! 255 = valid.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::raster::{Mask, NormalMap, Plane};
use crate::{Error, Result};

fn image_error(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| image_error(path, e))
}

/// Reads an 8-bit or 16-bit single-channel PNG normalized to `[0, 1]`.
pub fn read_gray_png(path: impl AsRef<Path>) -> Result<Plane> {
    let path = path.as_ref();
    match open(path)? {
        DynamicImage::ImageLuma8(img) => Ok(Plane::from_fn(
            img.width() as usize,
            img.height() as usize,
            |x, y| img.get_pixel(x as u32, y as u32).0[0] as f64 / 255.0,
        )),
        DynamicImage::ImageLuma16(img) => Ok(Plane::from_fn(
            img.width() as usize,
            img.height() as usize,
            |x, y| img.get_pixel(x as u32, y as u32).0[0] as f64 / 65535.0,
        )),
        _ => Err(Error::PixelFormat {
            path: path.to_path_buf(),
        }),
    }
}

/// Writes a `[0, 1]` plane as 16-bit grayscale PNG (values clamped).
pub fn write_gray16_png(path: impl AsRef<Path>, plane: &Plane) -> Result<()> {
    let path = path.as_ref();
    let img = ImageBuffer::from_fn(plane.width() as u32, plane.height() as u32, |x, y| {
        let v = plane.get(x as usize, y as usize).clamp(0.0, 1.0);
        Luma([(v * 65535.0).round() as u16])
    });
    img.save(path).map_err(|e| image_error(path, e))
}

pub fn read_mask_png(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let gray = open(path)?.into_luma8();
    Ok(Mask::from_fn(
        gray.width() as usize,
        gray.height() as usize,
        |x, y| gray.get_pixel(x as u32, y as u32).0[0] > 127,
    ))
}

pub fn write_mask_png(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let path = path.as_ref();
    let img = ImageBuffer::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.get(x as usize, y as usize) { 255u8 } else { 0u8 }])
    });
    img.save(path).map_err(|e| image_error(path, e))
}

/// 8-bit RGB preview of a normal map: each component mapped by `(n + 1) / 2`,
/// invalid pixels black.
pub fn write_normal_rgb_png(path: impl AsRef<Path>, normals: &NormalMap) -> Result<()> {
    let path = path.as_ref();
    let img = ImageBuffer::from_fn(normals.width() as u32, normals.height() as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        if !normals.is_valid(x, y) {
            return Rgb([0u8, 0, 0]);
        }
        let n = normals.get(x, y);
        let map = |c: f64| (((c + 1.0) / 2.0).clamp(0.0, 1.0) * 255.0).round() as u8;
        Rgb([map(n.x), map(n.y), map(n.z)])
    });
    img.save(path).map_err(|e| image_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use tempfile::tempdir;

    #[test]
    fn gray16_round_trip_hits_quantization_grid() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.png");
        let plane = Plane::from_fn(4, 4, |x, y| (x + 4 * y) as f64 / 15.0);
        write_gray16_png(&path, &plane).unwrap();
        let back = read_gray_png(&path).unwrap();
        for (a, b) in plane.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 65535.0, "{a} vs {b}");
        }
    }

    #[test]
    fn eight_bit_png_normalizes_by_255() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g8.png");
        let img = ImageBuffer::from_fn(2, 1, |x, _| Luma([if x == 0 { 0u8 } else { 255 }]));
        img.save(&path).unwrap();
        let plane = read_gray_png(&path).unwrap();
        assert_eq!(plane.get(0, 0), 0.0);
        assert_eq!(plane.get(1, 0), 1.0);
    }

    #[test]
    fn rgb_input_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.png");
        let img = ImageBuffer::from_fn(2, 2, |_, _| Rgb([1u8, 2, 3]));
        img.save(&path).unwrap();
        assert!(matches!(
            read_gray_png(&path),
            Err(Error::PixelFormat { .. })
        ));
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.png");
        let mask = Mask::from_fn(3, 3, |x, y| (x + y) % 2 == 0);
        write_mask_png(&path, &mask).unwrap();
        assert_eq!(read_mask_png(&path).unwrap(), mask);
    }

    #[test]
    fn normal_preview_maps_up_axis_to_high_blue() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("n.png");
        let mut map = NormalMap::new(2, 1);
        map.set(0, 0, Vector3::new(0.0, 0.0, 1.0));
        write_normal_rgb_png(&path, &map).unwrap();
        let img = image::open(&path).unwrap().into_rgb8();
        assert_eq!(img.get_pixel(0, 0).0, [128, 128, 255]);
        assert_eq!(img.get_pixel(1, 0).0, [0, 0, 0]);
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let err = read_gray_png("/nonexistent/zzz.png").unwrap_err();
        assert!(err.to_string().contains("zzz.png"));
        assert!(err.is_data_error());
    }
}
