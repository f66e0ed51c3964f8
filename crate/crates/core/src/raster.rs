//! Row-major raster containers: scalar planes, boolean masks, and normal maps.

use nalgebra::Vector3;

use crate::{Error, Result};

/// A single-channel `f64` image, row-major, `(0, 0)` at the top left.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    /// Zero-filled plane.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::PlaneSize {
                width,
                height,
                needed: width * height,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Per-pixel validity mask with the same layout as [`Plane`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    /// All-invalid mask.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    /// All-valid mask.
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, valid: bool) {
        self.data[y * self.width + x] = valid;
    }

    pub fn count_valid(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Intersection of two same-sized masks.
    pub fn and(&self, other: &Mask) -> Result<Mask> {
        check_dims("mask intersection", self.dims(), other.dims())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a && b)
            .collect();
        Ok(Mask {
            width: self.width,
            height: self.height,
            data,
        })
    }
}

/// A per-pixel field of unit surface normals plus validity.
///
/// Invalid pixels hold the zero vector, which is also how they are stored on
/// disk; valid pixels hold unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    normals: Vec<Vector3<f64>>,
    mask: Mask,
}

impl NormalMap {
    /// All pixels invalid.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            normals: vec![Vector3::zeros(); width * height],
            mask: Mask::new(width, height),
        }
    }

    pub fn from_parts(width: usize, height: usize, normals: Vec<Vector3<f64>>, mask: Mask) -> Result<Self> {
        if normals.len() != width * height {
            return Err(Error::PlaneSize {
                width,
                height,
                needed: width * height,
                got: normals.len(),
            });
        }
        check_dims("normal map mask", (width, height), mask.dims())?;
        Ok(Self {
            width,
            height,
            normals,
            mask,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Vector3<f64> {
        self.normals[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.mask.get(x, y)
    }

    /// Stores a normal and marks the pixel valid.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, normal: Vector3<f64>) {
        self.normals[y * self.width + x] = normal;
        self.mask.set(x, y, true);
    }

    /// Clears the pixel back to invalid (zero vector).
    pub fn set_invalid(&mut self, x: usize, y: usize) {
        self.normals[y * self.width + x] = Vector3::zeros();
        self.mask.set(x, y, false);
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn valid_count(&self) -> usize {
        self.mask.count_valid()
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }
}

/// Shared dimension guard used across the crate.
pub(crate) fn check_dims(
    what: &'static str,
    expected: (usize, usize),
    got: (usize, usize),
) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            what,
            expected_w: expected.0,
            expected_h: expected.1,
            got_w: got.0,
            got_h: got.1,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_round_trips_values() {
        let mut p = Plane::new(3, 2);
        p.set(2, 1, 7.5);
        assert_eq!(p.get(2, 1), 7.5);
        assert_eq!(p.get(0, 0), 0.0);
        assert_eq!(p.dims(), (3, 2));
    }

    #[test]
    fn plane_from_vec_rejects_bad_length() {
        assert!(Plane::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn mask_intersection() {
        let a = Mask::from_fn(2, 1, |x, _| x == 0);
        let b = Mask::full(2, 1);
        let c = a.and(&b).unwrap();
        assert!(c.get(0, 0));
        assert!(!c.get(1, 0));
        assert_eq!(c.count_valid(), 1);
    }

    #[test]
    fn normal_map_starts_invalid_and_zero() {
        let mut m = NormalMap::new(2, 2);
        assert!(!m.is_valid(1, 1));
        assert_eq!(m.get(1, 1), Vector3::zeros());
        m.set(1, 1, Vector3::new(0.0, 0.0, 1.0));
        assert!(m.is_valid(1, 1));
        m.set_invalid(1, 1);
        assert!(!m.is_valid(1, 1));
        assert_eq!(m.get(1, 1), Vector3::zeros());
    }
}
