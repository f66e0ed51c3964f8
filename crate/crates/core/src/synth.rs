//! Analytic orthographic renderer for polarization test scenes.
//!
//! Scenes are built from shapes with closed-form normals (hemispheres and
//! tilted planes), viewed along the optical axis. Each surface pixel gets
//! its specular DoLP from the Fresnel curve and its AoLP from the surface
//! azimuth (`aolp = azimuth - pi/2`, the specular relation), and the four
//! canonical polarizer intensities are synthesized from the polarizer
//! sinusoid. An optional corruption stage models the transmission fault of
//! transparent materials: inside a low-zenith region, pixels flip their
//! AoLP by a quarter turn with some probability (plus Gaussian jitter).
//!
//! All randomness comes from a per-pixel keyed stream, so a scene renders
//! bit-identically regardless of traversal or thread count, and a turntable
//! sweep is deterministic per (seed, rotation).

use serde::{Deserialize, Serialize};

use crate::fresnel::{self, RefractionIndex, ZENITH_CAP};
use crate::raster::{Mask, NormalMap, Plane};
use crate::rng::SplitMix64;
use crate::stokes::{wrap_aolp, PolarizationStack, CANONICAL_ANGLES};
use crate::{Error, Result};

use std::f64::consts::{FRAC_PI_2, PI};

/// Background (off-surface) pixels carry a random AoLP with a DoLP drawn
/// uniformly below this, modeling faint incidental polarization.
pub const BACKGROUND_MAX_DOLP: f64 = 0.05;

/// Analytic scene geometry. Later entries of a composite draw over earlier
/// ones where they overlap.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Solid hemisphere bulging toward the camera; `center` and `radius`
    /// are in pixels (continuous coordinates, pixel centers at x + 0.5).
    Hemisphere { radius: f64, center: (f64, f64) },
    /// Infinite tilted plane filling the frame with a constant normal.
    TiltedPlane { zenith: f64, azimuth: f64 },
    Composite { shapes: Vec<Shape> },
}

impl Shape {
    fn validate(&self, width: usize, height: usize) -> Result<()> {
        match self {
            Shape::Hemisphere { radius, center } => {
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::Scene(format!("hemisphere radius {radius} must be positive")));
                }
                let (cx, cy) = *center;
                if !cx.is_finite() || !cy.is_finite() {
                    return Err(Error::Scene("hemisphere center must be finite".into()));
                }
                if cx - radius < 0.0
                    || cy - radius < 0.0
                    || cx + radius > width as f64
                    || cy + radius > height as f64
                {
                    return Err(Error::Scene(format!(
                        "hemisphere (center ({cx}, {cy}), radius {radius}) exceeds the {width}x{height} frame"
                    )));
                }
                Ok(())
            }
            Shape::TiltedPlane { zenith, azimuth } => {
                if !zenith.is_finite() || !(0.0..FRAC_PI_2).contains(zenith) {
                    return Err(Error::Scene(format!("plane zenith {zenith} must lie in [0, pi/2)")));
                }
                if !azimuth.is_finite() {
                    return Err(Error::Scene("plane azimuth must be finite".into()));
                }
                Ok(())
            }
            Shape::Composite { shapes } => {
                if shapes.is_empty() {
                    return Err(Error::Scene("composite needs at least one shape".into()));
                }
                shapes.iter().try_for_each(|s| s.validate(width, height))
            }
        }
    }

    /// Zenith and azimuth of the surface at continuous image position
    /// `(x, y)`, or `None` where the shape is absent.
    fn sample(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        match self {
            Shape::Hemisphere { radius, center } => {
                let dx = x - center.0;
                let dy = y - center.1;
                let r = dx.hypot(dy);
                if r > *radius {
                    return None;
                }
                let zenith = (r / radius).min(1.0).asin();
                let azimuth = fresnel::wrap_azimuth(dy.atan2(dx));
                Some((zenith, azimuth))
            }
            Shape::TiltedPlane { zenith, azimuth } => Some((*zenith, *azimuth)),
            Shape::Composite { shapes } => shapes.iter().rev().find_map(|s| s.sample(x, y)),
        }
    }
}

/// Transmission-fault corruption: below `zenith_threshold`, each pixel's
/// AoLP flips by a quarter turn with `flip_probability` and picks up
/// Gaussian jitter of `aolp_noise_sigma` radians.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct TransmissionModel {
    pub enabled: bool,
    pub zenith_threshold: f64,
    pub flip_probability: f64,
    pub aolp_noise_sigma: f64,
}

impl Default for TransmissionModel {
    fn default() -> Self {
        Self {
            enabled: false,
            zenith_threshold: 20.0_f64.to_radians(),
            flip_probability: 0.5,
            aolp_noise_sigma: 0.1,
        }
    }
}

/// Optional uniform quantization of the synthesized intensities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quantization {
    #[default]
    None,
    Bits(u8),
}

/// Full description of a synthetic polarization acquisition.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SceneSpec {
    pub shape: Shape,
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_n")]
    pub n: f64,
    /// Unpolarized illumination level; intensities stay in `[0, 1]` for
    /// values up to 0.5.
    #[serde(default = "default_mean_intensity")]
    pub mean_intensity: f64,
    #[serde(default)]
    pub transmission: TransmissionModel,
    #[serde(default)]
    pub quantization: Quantization,
    #[serde(default)]
    pub seed: u64,
}

fn default_n() -> f64 {
    fresnel::GLASS.value()
}

fn default_mean_intensity() -> f64 {
    0.35
}

impl SceneSpec {
    pub fn validate(&self) -> Result<RefractionIndex> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Scene(format!(
                "image size {}x{} must be nonzero",
                self.width, self.height
            )));
        }
        self.shape.validate(self.width, self.height)?;
        let n = RefractionIndex::new(self.n)?;
        if !self.mean_intensity.is_finite() || !(0.0..=1.0).contains(&self.mean_intensity) {
            return Err(Error::Scene(format!(
                "mean intensity {} must lie in [0, 1]",
                self.mean_intensity
            )));
        }
        let t = &self.transmission;
        if !(0.0..=FRAC_PI_2).contains(&t.zenith_threshold) {
            return Err(Error::Scene(format!(
                "zenith threshold {} must lie in [0, pi/2]",
                t.zenith_threshold
            )));
        }
        if !(0.0..=1.0).contains(&t.flip_probability) {
            return Err(Error::Scene(format!(
                "flip probability {} must lie in [0, 1]",
                t.flip_probability
            )));
        }
        if !t.aolp_noise_sigma.is_finite() || t.aolp_noise_sigma < 0.0 {
            return Err(Error::Scene(format!(
                "AoLP noise sigma {} must be non-negative",
                t.aolp_noise_sigma
            )));
        }
        if let Quantization::Bits(bits) = self.quantization {
            if !(8..=16).contains(&bits) {
                return Err(Error::Scene(format!("quantization bits {bits} must lie in 8..=16")));
            }
        }
        Ok(n)
    }
}

/// Everything the renderer knows about one frame.
#[derive(Debug, Clone)]
pub struct RenderedSample {
    pub stack: PolarizationStack,
    pub gt_normals: NormalMap,
    pub gt_zenith: Plane,
    pub gt_azimuth: Plane,
    /// Pixels whose AoLP was flipped by the transmission fault.
    pub corruption_mask: Mask,
}

fn quantize(v: f64, q: Quantization) -> f64 {
    match q {
        Quantization::None => v,
        Quantization::Bits(bits) => {
            let levels = ((1u32 << bits) - 1) as f64;
            (v.clamp(0.0, 1.0) * levels).round() / levels
        }
    }
}

/// Renders the scene as seen after turning it by `rotation` radians about
/// the optical axis through the image center.
pub fn render_rotated(spec: &SceneSpec, rotation: f64) -> Result<RenderedSample> {
    let n = spec.validate()?;
    let (width, height) = (spec.width, spec.height);
    let center_x = width as f64 / 2.0;
    let center_y = height as f64 / 2.0;
    let (rot_sin, rot_cos) = rotation.sin_cos();

    let mut planes = vec![Plane::new(width, height); 4];
    let mut gt_normals = NormalMap::new(width, height);
    let mut gt_zenith = Plane::new(width, height);
    let mut gt_azimuth = Plane::new(width, height);
    let mut corruption_mask = Mask::new(width, height);

    for y in 0..height {
        for x in 0..width {
            // Object rotation = inverse rotation of the sample position,
            // then forward rotation of the surface azimuth.
            let px = x as f64 + 0.5 - center_x;
            let py = y as f64 + 0.5 - center_y;
            let qx = rot_cos * px + rot_sin * py + center_x;
            let qy = -rot_sin * px + rot_cos * py + center_y;

            let mut rng =
                SplitMix64::keyed(spec.seed, &[rotation.to_bits(), x as u64, y as u64]);

            let (dolp, aolp) = match spec.shape.sample(qx, qy) {
                Some((zenith, base_azimuth)) => {
                    let zenith = zenith.min(ZENITH_CAP);
                    let azimuth = fresnel::wrap_azimuth(base_azimuth + rotation);
                    gt_normals.set(x, y, fresnel::normal_from_angles(zenith, azimuth));
                    gt_zenith.set(x, y, zenith);
                    gt_azimuth.set(x, y, azimuth);

                    let dolp = dolp_at(zenith, n);
                    let mut aolp = wrap_aolp(azimuth - FRAC_PI_2);
                    let t = &spec.transmission;
                    if t.enabled
                        && zenith < t.zenith_threshold
                        && rng.next_f64() < t.flip_probability
                    {
                        aolp = wrap_aolp(
                            aolp + FRAC_PI_2 + rng.next_gaussian() * t.aolp_noise_sigma,
                        );
                        corruption_mask.set(x, y, true);
                    }
                    (dolp, aolp)
                }
                None => {
                    let aolp = rng.next_range(0.0, PI);
                    let dolp = rng.next_range(0.0, BACKGROUND_MAX_DOLP);
                    (dolp, aolp)
                }
            };

            for (k, &angle) in CANONICAL_ANGLES.iter().enumerate() {
                let intensity =
                    spec.mean_intensity * (1.0 + dolp * (2.0 * angle - 2.0 * aolp).cos());
                planes[k].set(x, y, quantize(intensity, spec.quantization));
            }
        }
    }

    let stack = PolarizationStack::new(CANONICAL_ANGLES.to_vec(), planes)?;
    Ok(RenderedSample {
        stack,
        gt_normals,
        gt_zenith,
        gt_azimuth,
        corruption_mask,
    })
}

#[inline]
fn dolp_at(zenith: f64, n: RefractionIndex) -> f64 {
    // Zenith is already capped below pi/2, so the domain check cannot fire.
    fresnel::dolp_from_zenith(zenith, n).expect("zenith capped below pi/2")
}

/// Renders the scene unrotated.
pub fn render(spec: &SceneSpec) -> Result<RenderedSample> {
    render_rotated(spec, 0.0)
}

/// Turntable sweep: one frame per rotation angle (radians).
pub fn sweep(spec: &SceneSpec, rotations: &[f64]) -> Result<Vec<RenderedSample>> {
    rotations
        .iter()
        .map(|&rotation| render_rotated(spec, rotation))
        .collect()
}
