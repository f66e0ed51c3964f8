//! Polarization stacks, Stokes features, sinusoid fitting, and
//! polarization-filter-array demosaicing.
//!
//! A pixel seen through a linear polarizer at angle `theta_pol` follows
//!
//! ```text
//! I(theta_pol) = mean * (1 + dolp * cos(2*theta_pol - 2*aolp))
//! ```
//!
//! With the canonical four angles {0, 45, 90, 135} degrees the Stokes
//! components have a closed form; any other set of three or more angles
//! (pairwise distinct modulo pi) goes through a least-squares fit of the same
//! sinusoid.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{Matrix3, Vector3};

use crate::raster::{check_dims, Mask, Plane};
use crate::{Error, Result};

/// Polarizer angles of the canonical four-shot acquisition, in radians.
pub const CANONICAL_ANGLES: [f64; 4] = [0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4];

/// DoLP below which the AoLP carries no usable signal; such pixels are
/// flagged in [`PolarFeatures::low_signal`].
pub const LOW_SIGNAL_DOLP: f64 = 1e-4;

/// Angles closer than this modulo pi count as coincident.
const ANGLE_COINCIDENCE_TOL: f64 = 1e-9;

/// Wraps an angle into `[0, pi)`; AoLP is pi-periodic.
#[inline]
pub fn wrap_aolp(phi: f64) -> f64 {
    let r = phi.rem_euclid(PI);
    if r >= PI {
        r - PI
    } else {
        r
    }
}

/// Distance between two angles modulo pi.
#[inline]
pub fn aolp_distance(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(PI);
    r.min(PI - r)
}

/// A set of co-registered intensity planes, one per polarizer angle.
///
/// Construction enforces: at least 3 angles, pairwise distinct modulo pi,
/// one plane per angle, all planes the same size, all intensities finite and
/// non-negative.
#[derive(Debug, Clone)]
pub struct PolarizationStack {
    angles: Vec<f64>,
    planes: Vec<Plane>,
    width: usize,
    height: usize,
}

impl PolarizationStack {
    pub fn new(angles: Vec<f64>, planes: Vec<Plane>) -> Result<Self> {
        if angles.len() < 3 {
            return Err(Error::TooFewAngles { got: angles.len() });
        }
        if planes.len() != angles.len() {
            return Err(Error::PlaneCount {
                angles: angles.len(),
                planes: planes.len(),
            });
        }
        for &a in &angles {
            if !a.is_finite() {
                return Err(Error::Domain {
                    what: "polarizer angle",
                    value: a,
                });
            }
        }
        for i in 0..angles.len() {
            for j in i + 1..angles.len() {
                if aolp_distance(angles[i], angles[j]) < ANGLE_COINCIDENCE_TOL {
                    return Err(Error::AnglesCoincide {
                        a: angles[i],
                        b: angles[j],
                    });
                }
            }
        }
        let (width, height) = planes[0].dims();
        for (k, plane) in planes.iter().enumerate() {
            check_dims("polarization stack plane", (width, height), plane.dims())?;
            for (i, &v) in plane.data().iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::BadIntensity {
                        plane: k,
                        x: i % width,
                        y: i / width,
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            angles,
            planes,
            width,
            height,
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

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn plane(&self, index: usize) -> &Plane {
        &self.planes[index]
    }

    /// Indices of the planes at 0, 45, 90, 135 degrees, if this is exactly
    /// the canonical stack (in any order).
    fn canonical_indices(&self) -> Option<[usize; 4]> {
        if self.angles.len() != 4 {
            return None;
        }
        let mut idx = [usize::MAX; 4];
        for (slot, &target) in CANONICAL_ANGLES.iter().enumerate() {
            idx[slot] = self
                .angles
                .iter()
                .position(|&a| aolp_distance(a, target) < ANGLE_COINCIDENCE_TOL)?;
        }
        Some(idx)
    }
}

/// Per-pixel Stokes components and polarization features.
///
/// `s0` is the total intensity (twice the sinusoid mean), `dolp` lies in
/// `[0, 1]` (values above 1 from noise are clamped and counted in
/// `clamp_count`), and `aolp` lies in `[0, pi)` with `0` at pixels carrying
/// no signal at all.
#[derive(Debug, Clone)]
pub struct PolarFeatures {
    pub s0: Plane,
    pub s1: Plane,
    pub s2: Plane,
    pub dolp: Plane,
    pub aolp: Plane,
    /// Pixels where `dolp < LOW_SIGNAL_DOLP`; their AoLP is unreliable.
    pub low_signal: Mask,
    /// Number of pixels whose DoLP exceeded 1 before clamping.
    pub clamp_count: usize,
}

impl PolarFeatures {
    pub fn dims(&self) -> (usize, usize) {
        self.s0.dims()
    }
}

/// Result of fitting the polarizer-angle sinusoid at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub mean: f64,
    pub dolp: f64,
    pub aolp: f64,
}

/// Least-squares coefficients (c0, c1, c2) of
/// `I = c0 + c1*cos(2*theta) + c2*sin(2*theta)`.
fn fit_coefficients(samples: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples { got: samples.len() });
    }
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for &(angle, intensity) in samples {
        let (s, c) = (2.0 * angle).sin_cos();
        let basis = Vector3::new(1.0, c, s);
        m += basis * basis.transpose();
        rhs += basis * intensity;
    }
    // A coincident-angle set makes the normal matrix singular.
    if m.determinant().abs() < 1e-9 {
        return Err(Error::DegenerateFit);
    }
    let coeffs = m.lu().solve(&rhs).ok_or(Error::DegenerateFit)?;
    Ok((coeffs.x, coeffs.y, coeffs.z))
}

fn features_from_coefficients(c0: f64, c1: f64, c2: f64) -> SinusoidFit {
    let amplitude = c1.hypot(c2);
    // An amplitude at the round-off floor of the solve is no signal at all;
    // without the snap, atan2 of two machine-epsilon residuals would report
    // an arbitrary phase for unpolarized pixels.
    if c0 <= 0.0 || amplitude <= c0 * 1e-13 {
        return SinusoidFit {
            mean: c0,
            dolp: 0.0,
            aolp: 0.0,
        };
    }
    SinusoidFit {
        mean: c0,
        dolp: (amplitude / c0).min(1.0),
        aolp: wrap_aolp(0.5 * c2.atan2(c1)),
    }
}

/// Fits the intensity sinusoid to `(polarizer angle, intensity)` samples.
///
/// Needs at least 3 samples with angles pairwise distinct modulo pi. The
/// recovered DoLP is clamped to `[0, 1]` (0 when the fitted mean is not
/// positive) and the AoLP is wrapped into `[0, pi)`.
pub fn fit_sinusoid(samples: &[(f64, f64)]) -> Result<SinusoidFit> {
    let (c0, c1, c2) = fit_coefficients(samples)?;
    Ok(features_from_coefficients(c0, c1, c2))
}

/// Computes Stokes components, DoLP, and AoLP for every pixel.
///
/// The canonical four-angle stack uses the closed form
/// `s0 = (I0 + I45 + I90 + I135) / 2`, `s1 = I0 - I90`, `s2 = I45 - I135`;
/// other stacks go through [`fit_sinusoid`] per pixel. Both paths agree on
/// canonical input.
pub fn compute_features(stack: &PolarizationStack) -> Result<PolarFeatures> {
    let (width, height) = stack.dims();
    let mut s0 = Plane::new(width, height);
    let mut s1 = Plane::new(width, height);
    let mut s2 = Plane::new(width, height);
    let mut dolp = Plane::new(width, height);
    let mut aolp = Plane::new(width, height);
    let mut low_signal = Mask::new(width, height);
    let mut clamp_count = 0usize;

    let canonical = stack.canonical_indices();
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(stack.angles().len());

    for y in 0..height {
        for x in 0..width {
            let (v0, v1, v2) = match canonical {
                Some([i0, i45, i90, i135]) => {
                    let a = stack.plane(i0).get(x, y);
                    let b = stack.plane(i45).get(x, y);
                    let c = stack.plane(i90).get(x, y);
                    let d = stack.plane(i135).get(x, y);
                    ((a + b + c + d) / 2.0, a - c, b - d)
                }
                None => {
                    samples.clear();
                    samples.extend(
                        stack
                            .angles()
                            .iter()
                            .zip(stack.planes())
                            .map(|(&angle, plane)| (angle, plane.get(x, y))),
                    );
                    let (c0, c1, c2) = fit_coefficients(&samples)?;
                    (2.0 * c0, 2.0 * c1, 2.0 * c2)
                }
            };

            let amplitude = v1.hypot(v2);
            let mut rho = if v0 <= 0.0 { 0.0 } else { amplitude / v0 };
            if rho > 1.0 {
                rho = 1.0;
                clamp_count += 1;
            }
            let phi = if amplitude == 0.0 {
                0.0
            } else {
                wrap_aolp(0.5 * v2.atan2(v1))
            };

            s0.set(x, y, v0);
            s1.set(x, y, v1);
            s2.set(x, y, v2);
            dolp.set(x, y, rho);
            aolp.set(x, y, phi);
            if rho < LOW_SIGNAL_DOLP {
                low_signal.set(x, y, true);
            }
        }
    }

    Ok(PolarFeatures {
        s0,
        s1,
        s2,
        dolp,
        aolp,
        low_signal,
        clamp_count,
    })
}

/// One filter orientation of a 2x2 polarization filter array cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfaOrientation {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl PfaOrientation {
    pub fn angle(self) -> f64 {
        match self {
            PfaOrientation::Deg0 => CANONICAL_ANGLES[0],
            PfaOrientation::Deg45 => CANONICAL_ANGLES[1],
            PfaOrientation::Deg90 => CANONICAL_ANGLES[2],
            PfaOrientation::Deg135 => CANONICAL_ANGLES[3],
        }
    }
}

/// Raw sensor frame behind a 2x2 polarization filter array.
///
/// `pattern` lists the orientation of each cell position in the order
/// top-left, top-right, bottom-left, bottom-right and must name each
/// orientation exactly once. Dimensions must be even.
#[derive(Debug, Clone)]
pub struct RawMosaic {
    values: Plane,
    pattern: [PfaOrientation; 4],
}

impl RawMosaic {
    pub fn new(values: Plane, pattern: [PfaOrientation; 4]) -> Result<Self> {
        let (width, height) = values.dims();
        if width % 2 != 0 || height % 2 != 0 {
            return Err(Error::OddMosaicDimensions { width, height });
        }
        for orientation in [
            PfaOrientation::Deg0,
            PfaOrientation::Deg45,
            PfaOrientation::Deg90,
            PfaOrientation::Deg135,
        ] {
            if !pattern.contains(&orientation) {
                return Err(Error::InvalidPattern);
            }
        }
        Ok(Self { values, pattern })
    }

    pub fn values(&self) -> &Plane {
        &self.values
    }

    pub fn pattern(&self) -> [PfaOrientation; 4] {
        self.pattern
    }
}

/// Expands a filter-array mosaic to four full-resolution planes by bilinear
/// interpolation of each orientation's half-resolution sub-grid (edges
/// clamped). The output stack is ordered 0, 45, 90, 135 degrees.
pub fn demosaic_pfa(mosaic: &RawMosaic) -> Result<PolarizationStack> {
    let (width, height) = mosaic.values().dims();
    let sub_w = width / 2;
    let sub_h = height / 2;

    let orientations = [
        PfaOrientation::Deg0,
        PfaOrientation::Deg45,
        PfaOrientation::Deg90,
        PfaOrientation::Deg135,
    ];
    let mut planes = Vec::with_capacity(4);
    for orientation in orientations {
        let cell = mosaic
            .pattern()
            .iter()
            .position(|&p| p == orientation)
            .expect("pattern validated at construction");
        let ox = cell % 2;
        let oy = cell / 2;
        let sub = |i: usize, j: usize| mosaic.values().get(ox + 2 * i, oy + 2 * j);

        let plane = Plane::from_fn(width, height, |x, y| {
            let u = ((x as f64 - ox as f64) / 2.0).clamp(0.0, (sub_w - 1) as f64);
            let v = ((y as f64 - oy as f64) / 2.0).clamp(0.0, (sub_h - 1) as f64);
            let i0 = u.floor() as usize;
            let j0 = v.floor() as usize;
            let i1 = (i0 + 1).min(sub_w - 1);
            let j1 = (j0 + 1).min(sub_h - 1);
            let fu = u - i0 as f64;
            let fv = v - j0 as f64;
            (1.0 - fu) * (1.0 - fv) * sub(i0, j0)
                + fu * (1.0 - fv) * sub(i1, j0)
                + (1.0 - fu) * fv * sub(i0, j1)
                + fu * fv * sub(i1, j1)
        });
        planes.push(plane);
    }

    PolarizationStack::new(CANONICAL_ANGLES.to_vec(), planes)
}
