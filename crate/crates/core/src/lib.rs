//! Shape-from-polarization toolkit for transparent surfaces.
//!
//! The crate covers the full single-view pipeline:
//!
//! * [`stokes`] — polarization image stacks, Stokes features (DoLP / AoLP),
//!   sinusoid fitting, and polarization-filter-array demosaicing.
//! * [`fresnel`] — the specular Fresnel DoLP curve, its two-branch zenith
//!   inversion, and the four-candidate surface-normal prior.
//! * [`confidence`] — AoLP local noise density and its normalization into a
//!   per-pixel confidence / reliability pair.
//! * [`fuse`] — candidate disambiguation, normal-field smoothing, and
//!   reliability-gated fusion into a final normal map.
//! * [`synth`] — an analytic orthographic renderer for test scenes, with a
//!   transmission-fault corruption model and turntable sweeps.
//! * [`metrics`] — angular-error maps and summary statistics.
//! * [`dataset`] — the on-disk layout shared by the CLI stages (PFM planes,
//!   PNG intensities and masks, JSON sidecars).
//!
//! Conventions used throughout: intensities are linear and non-negative,
//! angles are radians, AoLP lives in `[0, pi)`, azimuth in `[0, 2*pi)`, and
//! normals are unit vectors in camera space (`x` right, `y` down, `z` toward
//! the camera, so visible surfaces have `z >= 0`).

pub mod confidence;
mod error;
pub mod dataset;
pub mod fresnel;
pub mod fuse;
pub mod io;
pub mod metrics;
pub mod raster;
pub mod rng;
pub mod stokes;
pub mod synth;

pub use error::{Error, Result};
