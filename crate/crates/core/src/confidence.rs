//! Per-pixel AoLP noise density and its normalization into a
//! confidence / reliability pair.
//!
//! Transmitted light contaminates the AoLP of transparent surfaces with
//! quarter-turn flips, so locally noisy AoLP marks untrustworthy pixels. The
//! density at a pixel is the sum of `|p - p_mean|^m` over the valid pixels
//! `p` of its K x K window (borders mirror-reflected, the center included).
//! The comparison is a plain difference, not a circular one: a smooth field
//! crossing the 0/pi wrap also registers, deliberately, because that seam is
//! exactly where quarter-turn faults land.

use crate::raster::{check_dims, Mask, Plane};
use crate::{Error, Result};

pub const DEFAULT_WINDOW: usize = 9;
pub const DEFAULT_EXPONENT: f64 = 0.5;

/// Densities below this maximum mean the field is flat; normalization then
/// reports zero confidence everywhere instead of dividing by noise.
pub const DEGENERATE_MAX: f64 = 1e-12;

/// Per-sample deviations below this count as exactly zero texture.
const DEVIATION_FLOOR: f64 = 1e-12;

/// Raw noise densities plus the parameters that produced them.
#[derive(Debug, Clone)]
pub struct NoiseDensityMap {
    pub d: Plane,
    pub window: usize,
    pub exponent: f64,
}

/// Normalized confidence `c = d / max(d)` and reliability `r = 1 - c`.
///
/// High confidence marks *noise* (the fault detector is confident the pixel
/// is contaminated); reliability is its complement and is what gates the
/// prior during fusion. `c + r = 1` holds at every pixel, including invalid
/// ones, which carry `c = 0`.
#[derive(Debug, Clone)]
pub struct ReliabilityMap {
    pub confidence: Plane,
    pub reliability: Plane,
    pub max_density: f64,
    pub degenerate: bool,
}

/// Mirror-reflects an out-of-range coordinate back into `[0, len)` without
/// repeating the edge sample.
#[inline]
fn reflect(mut i: isize, len: usize) -> usize {
    let len = len as isize;
    if len == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i;
        } else if i >= len {
            i = 2 * len - 2 - i;
        } else {
            return i as usize;
        }
    }
}

/// Sum of `|p - mean(P)|^exponent` over each pixel's windowed neighbor set
/// `P` (valid pixels only, reflect-padded at image borders). Invalid center
/// pixels get density 0.
pub fn noise_density(
    aolp: &Plane,
    window: usize,
    exponent: f64,
    mask: &Mask,
) -> Result<NoiseDensityMap> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::WindowSize { got: window });
    }
    if !exponent.is_finite() || exponent <= 0.0 {
        return Err(Error::Exponent { got: exponent });
    }
    let (width, height) = aolp.dims();
    check_dims("noise-density mask", (width, height), mask.dims())?;

    let half = (window / 2) as isize;
    let mut d = Plane::new(width, height);
    let mut values = Vec::with_capacity(window * window);

    for y in 0..height {
        for x in 0..width {
            if !mask.get(x, y) {
                continue;
            }
            values.clear();
            for dy in -half..=half {
                for dx in -half..=half {
                    let nx = reflect(x as isize + dx, width);
                    let ny = reflect(y as isize + dy, height);
                    if mask.get(nx, ny) {
                        values.push(aolp.get(nx, ny));
                    }
                }
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            // Deviations at the round-off floor of the mean are treated as
            // zero: the fractional exponent would otherwise blow summation
            // noise on uniform patches up to visible densities.
            let density: f64 = values
                .iter()
                .map(|p| {
                    let dev = (p - mean).abs();
                    if dev < DEVIATION_FLOOR {
                        0.0
                    } else {
                        dev.powf(exponent)
                    }
                })
                .sum();
            d.set(x, y, density);
        }
    }

    Ok(NoiseDensityMap {
        d,
        window,
        exponent,
    })
}

/// Normalizes densities by their maximum over the valid pixels.
pub fn normalize_confidence(density: &NoiseDensityMap, mask: &Mask) -> Result<ReliabilityMap> {
    let (width, height) = density.d.dims();
    check_dims("confidence mask", (width, height), mask.dims())?;

    let mut max_density = 0.0f64;
    for y in 0..height {
        for x in 0..width {
            if mask.get(x, y) {
                max_density = max_density.max(density.d.get(x, y));
            }
        }
    }

    let degenerate = max_density < DEGENERATE_MAX;
    let mut confidence = Plane::new(width, height);
    let mut reliability = Plane::from_fn(width, height, |_, _| 1.0);
    if !degenerate {
        for y in 0..height {
            for x in 0..width {
                if mask.get(x, y) {
                    let c = density.d.get(x, y) / max_density;
                    confidence.set(x, y, c);
                    reliability.set(x, y, 1.0 - c);
                }
            }
        }
    }

    Ok(ReliabilityMap {
        confidence,
        reliability,
        max_density,
        degenerate,
    })
}
