//! Specular Fresnel degree of polarization and its inversion into
//! surface-normal candidates.
//!
//! For a dielectric with refraction index `n`, specular reflection at zenith
//! angle `theta` polarizes light by
//!
//! ```text
//! dolp(theta) = 2 sin^2(theta) cos(theta) sqrt(n^2 - sin^2 theta)
//!             / (n^2 - sin^2 theta - n^2 sin^2 theta + 2 sin^4 theta)
//! ```
//!
//! The curve rises from 0 at normal incidence to exactly 1 at the Brewster
//! angle `atan(n)` and falls back toward 0 at grazing incidence, so a
//! measured DoLP maps to two zenith candidates (one per monotone branch).
//! The AoLP determines the azimuth only up to a half-turn, giving two
//! azimuth candidates. Combining both ambiguities yields four normal
//! candidates per pixel.

use nalgebra::Vector3;

use crate::raster::{check_dims, Mask, NormalMap};
use crate::stokes::PolarFeatures;
use crate::{Error, Result};

use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Largest zenith angle the inversion reports; keeps results out of the
/// grazing-incidence singularity at pi/2.
pub const ZENITH_CAP: f64 = FRAC_PI_2 - 1e-6;

/// Validated refraction index of a dielectric (finite, > 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefractionIndex(f64);

/// Refraction index of common glass, the default for transparent objects.
pub const GLASS: RefractionIndex = RefractionIndex(1.52);

impl RefractionIndex {
    pub fn new(n: f64) -> Result<Self> {
        if !n.is_finite() || n <= 1.0 {
            return Err(Error::RefractionIndex { n });
        }
        Ok(Self(n))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Brewster angle `atan(n)`, where the specular DoLP peaks at 1.
    #[inline]
    pub fn brewster(self) -> f64 {
        self.0.atan()
    }
}

impl Default for RefractionIndex {
    fn default() -> Self {
        GLASS
    }
}

/// Evaluates the curve without the domain check; callers guarantee
/// `0 <= theta < pi/2`.
#[inline]
fn dolp_eval(theta: f64, n: f64) -> f64 {
    let sin2 = theta.sin().powi(2);
    let numerator = 2.0 * sin2 * theta.cos() * (n * n - sin2).sqrt();
    let denominator = n * n - sin2 - n * n * sin2 + 2.0 * sin2 * sin2;
    (numerator / denominator).clamp(0.0, 1.0)
}

/// Specular DoLP at zenith angle `theta in [0, pi/2)`.
pub fn dolp_from_zenith(theta: f64, n: RefractionIndex) -> Result<f64> {
    if !theta.is_finite() || !(0.0..FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain {
            what: "zenith angle",
            value: theta,
        });
    }
    Ok(dolp_eval(theta, n.value()))
}

/// The two zenith angles consistent with a measured DoLP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZenithPair {
    /// Root on the rising branch, in `[0, brewster]`.
    pub low: f64,
    /// Root on the falling branch, in `[brewster, ZENITH_CAP]`.
    pub high: f64,
    /// The Brewster angle separating the branches.
    pub brewster: f64,
}

/// Bisection accuracy on the zenith angle, well below the 1e-6 radian
/// round-trip guarantee; meeting it also puts the DoLP residual under 1e-9
/// everywhere on both branches.
const BISECT_WIDTH: f64 = 1e-12;
const BISECT_MAX_ITER: usize = 200;

fn bisect(target: f64, mut lo: f64, mut hi: f64, rising: bool, n: f64) -> f64 {
    for _ in 0..BISECT_MAX_ITER {
        if hi - lo < BISECT_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let below = dolp_eval(mid, n) < target;
        if below == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverts the specular DoLP curve, returning the zenith candidate on each
/// monotone branch.
///
/// `dolp = 1` maps to the Brewster angle twice; `dolp` below the curve's
/// value at [`ZENITH_CAP`] clamps the falling-branch root to the cap (the
/// true root would sit inside the grazing singularity), which is also why
/// `dolp = 0` reports `(0, ZENITH_CAP)`.
pub fn zenith_from_dolp(dolp: f64, n: RefractionIndex) -> Result<ZenithPair> {
    if !dolp.is_finite() || !(0.0..=1.0).contains(&dolp) {
        return Err(Error::Domain {
            what: "degree of polarization",
            value: dolp,
        });
    }
    let brewster = n.brewster();
    if dolp == 1.0 {
        return Ok(ZenithPair {
            low: brewster,
            high: brewster,
            brewster,
        });
    }
    let low = if dolp == 0.0 {
        0.0
    } else {
        bisect(dolp, 0.0, brewster, true, n.value())
    };
    let high = if dolp <= dolp_eval(ZENITH_CAP, n.value()) {
        ZENITH_CAP
    } else {
        bisect(dolp, brewster, ZENITH_CAP, false, n.value())
    };
    Ok(ZenithPair { low, high, brewster })
}

/// Wraps an azimuth into `[0, 2*pi)`.
#[inline]
pub fn wrap_azimuth(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        r - TAU
    } else {
        r
    }
}

/// The two azimuth candidates a measured AoLP admits: the surface azimuth
/// sits a quarter turn from the AoLP, with the side unknown. Returns
/// `(aolp + pi/2, aolp - pi/2)`, both wrapped into `[0, 2*pi)` and exactly
/// half a turn apart.
#[inline]
pub fn azimuth_candidates(aolp: f64) -> (f64, f64) {
    let plus = wrap_azimuth(aolp + FRAC_PI_2);
    let minus = if plus >= PI { plus - PI } else { plus + PI };
    (plus, minus)
}

/// Unit normal in camera space from spherical angles: zenith `theta` from
/// the optical axis, azimuth `a` in the image plane.
#[inline]
pub fn normal_from_angles(theta: f64, azimuth: f64) -> Vector3<f64> {
    let (sin_t, cos_t) = theta.sin_cos();
    let (sin_a, cos_a) = azimuth.sin_cos();
    Vector3::new(sin_t * cos_a, sin_t * sin_a, cos_t)
}

/// Which zenith branch a candidate normal uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZenithBranch {
    Low,
    High,
}

/// Which azimuth candidate a normal uses: `Plus` is `aolp + pi/2`, `Minus`
/// is `aolp - pi/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AzimuthBranch {
    Plus,
    Minus,
}

/// Fixed storage order of the four candidates:
/// `(low, +), (low, -), (high, +), (high, -)`.
pub const CANDIDATE_BRANCHES: [(ZenithBranch, AzimuthBranch); 4] = [
    (ZenithBranch::Low, AzimuthBranch::Plus),
    (ZenithBranch::Low, AzimuthBranch::Minus),
    (ZenithBranch::High, AzimuthBranch::Plus),
    (ZenithBranch::High, AzimuthBranch::Minus),
];

/// Index of a `(zenith, azimuth)` branch pair in [`CANDIDATE_BRANCHES`].
#[inline]
pub fn candidate_index(zenith: ZenithBranch, azimuth: AzimuthBranch) -> usize {
    let z = match zenith {
        ZenithBranch::Low => 0,
        ZenithBranch::High => 2,
    };
    let a = match azimuth {
        AzimuthBranch::Plus => 0,
        AzimuthBranch::Minus => 1,
    };
    z + a
}

/// The four normal candidates per pixel implied by Fresnel geometry, stored
/// in [`CANDIDATE_BRANCHES`] order; all four maps share one validity mask.
#[derive(Debug, Clone)]
pub struct PriorCandidates {
    pub maps: [NormalMap; 4],
}

impl PriorCandidates {
    pub fn dims(&self) -> (usize, usize) {
        self.maps[0].dims()
    }

    pub fn mask(&self) -> &Mask {
        self.maps[0].mask()
    }
}

/// Builds the four-candidate normal prior from per-pixel DoLP and AoLP.
///
/// Pixels outside `mask` stay invalid; a pixel whose DoLP cannot be
/// inverted (non-finite input) is dropped from the shared mask rather than
/// aborting the whole frame.
pub fn prior_candidates(
    features: &PolarFeatures,
    n: RefractionIndex,
    mask: &Mask,
) -> Result<PriorCandidates> {
    let (width, height) = features.dims();
    check_dims("prior mask", (width, height), mask.dims())?;

    let mut maps = [
        NormalMap::new(width, height),
        NormalMap::new(width, height),
        NormalMap::new(width, height),
        NormalMap::new(width, height),
    ];

    for y in 0..height {
        for x in 0..width {
            if !mask.get(x, y) {
                continue;
            }
            let dolp = features.dolp.get(x, y);
            let aolp = features.aolp.get(x, y);
            let Ok(zeniths) = zenith_from_dolp(dolp, n) else {
                continue;
            };
            let (a_plus, a_minus) = azimuth_candidates(aolp);
            for (k, (zb, ab)) in CANDIDATE_BRANCHES.iter().enumerate() {
                let theta = match zb {
                    ZenithBranch::Low => zeniths.low,
                    ZenithBranch::High => zeniths.high,
                };
                let azimuth = match ab {
                    AzimuthBranch::Plus => a_plus,
                    AzimuthBranch::Minus => a_minus,
                };
                maps[k].set(x, y, normal_from_angles(theta, azimuth));
            }
        }
    }

    Ok(PriorCandidates { maps })
}
