//! On-disk layout of pipeline artifacts.
//!
//! A rendered sample lives in `<object>/<rotation>/` holding the four
//! polarizer intensity images (`0.png` .. `135.png`, 16-bit), the reference
//! normals (`normals-gt.pfm`), the validity mask (`mask.png`), and a
//! `meta.json` echoing the scene description. Each downstream stage writes
//! its own directory of PFM planes next to a mask and a `meta.json`
//! recording the configuration that produced it, so any artifact can be
//! traced back to its inputs.
//!
//! All float planes travel as PFM, masks as 8-bit PNG, and metadata as
//! pretty-printed JSON with a fixed key order, keeping every artifact
//! byte-reproducible.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::confidence::ReliabilityMap;
use crate::fresnel::PriorCandidates;
use crate::io;
use crate::raster::{Mask, NormalMap};
use crate::stokes::{wrap_aolp, PolarFeatures, PolarizationStack, LOW_SIGNAL_DOLP};
use crate::synth::{RenderedSample, SceneSpec};
use crate::{Error, Result};

pub const INTENSITY_FILES: [&str; 4] = ["0.png", "45.png", "90.png", "135.png"];
pub const NORMALS_GT_FILE: &str = "normals-gt.pfm";
pub const MASK_FILE: &str = "mask.png";
pub const META_FILE: &str = "meta.json";
pub const FEATURE_FILES: [&str; 5] = ["s0.pfm", "s1.pfm", "s2.pfm", "dolp.pfm", "aolp.pfm"];
/// Candidate maps in the fixed order (low, +), (low, -), (high, +), (high, -).
pub const CANDIDATE_FILES: [&str; 4] = [
    "prior-low-plus.pfm",
    "prior-low-minus.pfm",
    "prior-high-plus.pfm",
    "prior-high-minus.pfm",
];
pub const CONFIDENCE_FILE: &str = "confidence.pfm";
pub const RELIABILITY_FILE: &str = "reliability.pfm";
pub const FUSED_FILE: &str = "fused.pfm";
pub const FUSED_PREVIEW_FILE: &str = "fused.png";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_TABLE_FILE: &str = "report.txt";

/// A named scene to render at one or more in-plane rotations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderJob {
    /// Object name; becomes the sample's top-level directory.
    pub name: String,
    pub scene: SceneSpec,
    /// In-plane camera rotations to render, degrees; one subdirectory each.
    #[serde(default = "default_rotations")]
    pub rotations_deg: Vec<f64>,
}

fn default_rotations() -> Vec<f64> {
    vec![0.0]
}

/// Sidecar of a rendered sample directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleMeta {
    pub scene: SceneSpec,
    pub rotation_deg: f64,
}

/// Sidecar of a features directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeaturesMeta {
    /// Polarizer angles of the intensity planes, degrees.
    pub angles_deg: Vec<f64>,
    /// Human-readable statement of the Stokes convention in use.
    pub convention: String,
    /// Pixels whose DoLP exceeded 1 before clamping.
    pub clamp_count: usize,
}

/// Sidecar of a prior-candidates directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorMeta {
    /// Refractive index used for the zenith inversion.
    pub n: f64,
    pub candidate_order: [String; 4],
}

/// Sidecar of a confidence directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfidenceMeta {
    pub window: usize,
    pub exponent: f64,
    pub max_density: f64,
    pub degenerate: bool,
}

/// Sidecar of a fused-normals directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FuseMeta {
    pub smoothing_iterations: usize,
    pub step_size: f64,
    pub reliability_floor: f64,
    /// "boundary" or "oracle".
    pub disambiguation: String,
    /// Where the per-pixel reliability came from; "constant 1" when no
    /// confidence input was given.
    pub reliability_source: String,
}

/// Directory name for a rotation: zero-padded integer degrees (`000`, `090`)
/// when whole, a two-decimal value otherwise.
pub fn rotation_dir_name(rotation_deg: f64) -> String {
    if (rotation_deg - rotation_deg.round()).abs() < 1e-9 {
        format!("{:03}", rotation_deg.round() as i64)
    } else {
        format!("{rotation_deg:.2}")
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes a rendered sample into `dir`: four 16-bit intensity PNGs, the
/// reference normals, the mask, and the metadata echo.
pub fn write_sample(dir: impl AsRef<Path>, sample: &RenderedSample, meta: &SampleMeta) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    for (plane, file) in sample.stack.planes().iter().zip(INTENSITY_FILES) {
        io::write_gray16_png(dir.join(file), plane)?;
    }
    io::write_pfm_normals(dir.join(NORMALS_GT_FILE), &sample.gt_normals)?;
    io::write_mask_png(dir.join(MASK_FILE), sample.gt_normals.mask())?;
    write_json(dir.join(META_FILE), meta)
}

/// Reads the four canonical intensity planes and the mask back from a
/// sample directory.
pub fn read_sample_stack(dir: impl AsRef<Path>) -> Result<(PolarizationStack, Mask)> {
    let dir = dir.as_ref();
    let mut planes = Vec::with_capacity(4);
    for file in INTENSITY_FILES {
        planes.push(io::read_gray_png(dir.join(file))?);
    }
    let angles = INTENSITY_FILES
        .iter()
        .map(|f| {
            let deg: f64 = f.trim_end_matches(".png").parse().expect("static names");
            deg.to_radians()
        })
        .collect();
    let stack = PolarizationStack::new(angles, planes)?;
    let mask = io::read_mask_png(dir.join(MASK_FILE))?;
    Ok((stack, mask))
}

/// Reads the reference normals of a sample directory.
pub fn read_gt_normals(dir: impl AsRef<Path>) -> Result<NormalMap> {
    io::read_pfm_normals(dir.as_ref().join(NORMALS_GT_FILE))
}

pub fn write_features(
    dir: impl AsRef<Path>,
    features: &PolarFeatures,
    mask: &Mask,
    meta: &FeaturesMeta,
) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    let planes = [
        &features.s0,
        &features.s1,
        &features.s2,
        &features.dolp,
        &features.aolp,
    ];
    for (plane, file) in planes.iter().zip(FEATURE_FILES) {
        io::write_pfm_gray(dir.join(file), plane)?;
    }
    io::write_mask_png(dir.join(MASK_FILE), mask)?;
    write_json(dir.join(META_FILE), meta)
}

pub fn read_features(dir: impl AsRef<Path>) -> Result<(PolarFeatures, Mask)> {
    let dir = dir.as_ref();
    let s0 = io::read_pfm_gray(dir.join(FEATURE_FILES[0]))?;
    let s1 = io::read_pfm_gray(dir.join(FEATURE_FILES[1]))?;
    let s2 = io::read_pfm_gray(dir.join(FEATURE_FILES[2]))?;
    let dolp = io::read_pfm_gray(dir.join(FEATURE_FILES[3]))?;
    let raw_aolp = io::read_pfm_gray(dir.join(FEATURE_FILES[4]))?;
    let mask = io::read_mask_png(dir.join(MASK_FILE))?;
    let meta: FeaturesMeta = read_json(dir.join(META_FILE))?;

    // The f32 round trip can nudge a value of pi onto the wrap point.
    let mut aolp = raw_aolp.clone();
    for v in aolp.data_mut() {
        *v = wrap_aolp(*v);
    }
    let low_signal = Mask::from_fn(dolp.width(), dolp.height(), |x, y| {
        dolp.get(x, y) < LOW_SIGNAL_DOLP
    });
    let features = PolarFeatures {
        s0,
        s1,
        s2,
        dolp,
        aolp,
        low_signal,
        clamp_count: meta.clamp_count,
    };
    Ok((features, mask))
}

pub fn write_prior(dir: impl AsRef<Path>, candidates: &PriorCandidates, meta: &PriorMeta) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    for (map, file) in candidates.maps.iter().zip(CANDIDATE_FILES) {
        io::write_pfm_normals(dir.join(file), map)?;
    }
    io::write_mask_png(dir.join(MASK_FILE), candidates.mask())?;
    write_json(dir.join(META_FILE), meta)
}

pub fn read_prior(dir: impl AsRef<Path>) -> Result<(PriorCandidates, PriorMeta)> {
    let dir = dir.as_ref();
    let mut maps = Vec::with_capacity(4);
    for file in CANDIDATE_FILES {
        maps.push(io::read_pfm_normals(dir.join(file))?);
    }
    let meta: PriorMeta = read_json(dir.join(META_FILE))?;
    let maps: [NormalMap; 4] = maps.try_into().expect("four candidate files");
    for map in &maps[1..] {
        crate::raster::check_dims("candidate map", maps[0].dims(), map.dims())?;
    }
    Ok((PriorCandidates { maps }, meta))
}

pub fn write_reliability(
    dir: impl AsRef<Path>,
    reliability: &ReliabilityMap,
    mask: &Mask,
    meta: &ConfidenceMeta,
) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    io::write_pfm_gray(dir.join(CONFIDENCE_FILE), &reliability.confidence)?;
    io::write_pfm_gray(dir.join(RELIABILITY_FILE), &reliability.reliability)?;
    io::write_mask_png(dir.join(MASK_FILE), mask)?;
    write_json(dir.join(META_FILE), meta)
}

pub fn read_reliability(dir: impl AsRef<Path>) -> Result<(ReliabilityMap, Mask)> {
    let dir = dir.as_ref();
    let confidence = io::read_pfm_gray(dir.join(CONFIDENCE_FILE))?;
    let reliability = io::read_pfm_gray(dir.join(RELIABILITY_FILE))?;
    let mask = io::read_mask_png(dir.join(MASK_FILE))?;
    let meta: ConfidenceMeta = read_json(dir.join(META_FILE))?;
    Ok((
        ReliabilityMap {
            confidence,
            reliability,
            max_density: meta.max_density,
            degenerate: meta.degenerate,
        },
        mask,
    ))
}

/// Writes fused normals as PFM plus an RGB preview mapping each component
/// through `(n + 1) / 2`.
pub fn write_fused(dir: impl AsRef<Path>, fused: &NormalMap, meta: &FuseMeta) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    io::write_pfm_normals(dir.join(FUSED_FILE), fused)?;
    io::write_normal_rgb_png(dir.join(FUSED_PREVIEW_FILE), fused)?;
    io::write_mask_png(dir.join(MASK_FILE), fused.mask())?;
    write_json(dir.join(META_FILE), meta)
}

pub fn read_fused(dir: impl AsRef<Path>) -> Result<NormalMap> {
    io::read_pfm_normals(dir.as_ref().join(FUSED_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    use crate::confidence::{noise_density, normalize_confidence};
    use crate::fresnel::{prior_candidates, GLASS};
    use crate::stokes::compute_features;
    use crate::synth::{render, Quantization, Shape, TransmissionModel};

    fn test_scene() -> SceneSpec {
        SceneSpec {
            shape: Shape::Hemisphere {
                radius: 10.0,
                center: (12.0, 12.0),
            },
            width: 24,
            height: 24,
            n: GLASS.value(),
            mean_intensity: 0.35,
            transmission: TransmissionModel::default(),
            quantization: Quantization::Bits(16),
            seed: 11,
        }
    }

    #[test]
    fn rotation_names() {
        assert_eq!(rotation_dir_name(0.0), "000");
        assert_eq!(rotation_dir_name(45.0), "045");
        assert_eq!(rotation_dir_name(180.0), "180");
        assert_eq!(rotation_dir_name(22.5), "22.50");
    }

    #[test]
    fn sample_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("ball/000");
        let scene = test_scene();
        let sample = render(&scene).unwrap();
        let meta = SampleMeta {
            scene: scene.clone(),
            rotation_deg: 0.0,
        };
        write_sample(&dir, &sample, &meta).unwrap();

        for file in INTENSITY_FILES {
            assert!(dir.join(file).exists(), "{file} missing");
        }
        assert!(dir.join(NORMALS_GT_FILE).exists());
        assert!(dir.join(MASK_FILE).exists());

        let (stack, mask) = read_sample_stack(&dir).unwrap();
        assert_eq!(stack.dims(), (24, 24));
        assert_eq!(mask.count_valid(), sample.gt_normals.valid_count());
        // 16-bit PNG quantization: intensities match to half a step.
        for (k, plane) in stack.planes().iter().enumerate() {
            for y in 0..24 {
                for x in 0..24 {
                    let original = sample.stack.plane(k).get(x, y);
                    assert!((plane.get(x, y) - original).abs() <= 0.5 / 65535.0 + 1e-9);
                }
            }
        }

        let gt = read_gt_normals(&dir).unwrap();
        assert_eq!(gt.valid_count(), sample.gt_normals.valid_count());
        let back: SampleMeta = read_json(dir.join(META_FILE)).unwrap();
        assert_eq!(back.scene.seed, 11);
    }

    #[test]
    fn features_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("features");
        let sample = render(&test_scene()).unwrap();
        let features = compute_features(&sample.stack).unwrap();
        let meta = FeaturesMeta {
            angles_deg: vec![0.0, 45.0, 90.0, 135.0],
            convention: "s0 = (i0+i45+i90+i135)/2, s1 = i0-i90, s2 = i45-i135".into(),
            clamp_count: features.clamp_count,
        };
        write_features(&dir, &features, sample.gt_normals.mask(), &meta).unwrap();
        let (back, mask) = read_features(&dir).unwrap();
        assert_eq!(back.clamp_count, features.clamp_count);
        assert_eq!(mask.count_valid(), sample.gt_normals.mask().count_valid());
        for y in 0..24 {
            for x in 0..24 {
                // f32 storage: inputs survive to single precision.
                assert_abs_diff_eq!(back.dolp.get(x, y), features.dolp.get(x, y), epsilon = 1e-6);
                assert!(
                    crate::stokes::aolp_distance(back.aolp.get(x, y), features.aolp.get(x, y)) < 1e-6
                );
                assert!(back.aolp.get(x, y) < std::f64::consts::PI);
            }
        }
    }

    #[test]
    fn prior_round_trip_keeps_candidate_order() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("prior");
        let sample = render(&test_scene()).unwrap();
        let features = compute_features(&sample.stack).unwrap();
        let candidates = prior_candidates(&features, GLASS, sample.gt_normals.mask()).unwrap();
        let meta = PriorMeta {
            n: GLASS.value(),
            candidate_order: [
                "low-plus".into(),
                "low-minus".into(),
                "high-plus".into(),
                "high-minus".into(),
            ],
        };
        write_prior(&dir, &candidates, &meta).unwrap();
        let (back, back_meta) = read_prior(&dir).unwrap();
        assert_eq!(back_meta.n, GLASS.value());
        for k in 0..4 {
            for y in 0..24 {
                for x in 0..24 {
                    assert_eq!(back.maps[k].is_valid(x, y), candidates.maps[k].is_valid(x, y));
                    if back.maps[k].is_valid(x, y) {
                        let d = (back.maps[k].get(x, y) - candidates.maps[k].get(x, y)).norm();
                        assert!(d < 1e-6, "candidate {k} drifted by {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn reliability_and_fused_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let sample = render(&test_scene()).unwrap();
        let features = compute_features(&sample.stack).unwrap();
        let mask = sample.gt_normals.mask();
        let density = noise_density(&features.aolp, 9, 0.5, mask).unwrap();
        let reliability = normalize_confidence(&density, mask).unwrap();

        let dir = tmp.path().join("confidence");
        let meta = ConfidenceMeta {
            window: 9,
            exponent: 0.5,
            max_density: reliability.max_density,
            degenerate: reliability.degenerate,
        };
        write_reliability(&dir, &reliability, mask, &meta).unwrap();
        let (back, back_mask) = read_reliability(&dir).unwrap();
        assert_eq!(back.degenerate, reliability.degenerate);
        assert_eq!(back_mask.count_valid(), mask.count_valid());
        for y in 0..24 {
            for x in 0..24 {
                assert_abs_diff_eq!(
                    back.reliability.get(x, y),
                    reliability.reliability.get(x, y),
                    epsilon = 1e-6
                );
            }
        }

        let dir = tmp.path().join("fused");
        let fuse_meta = FuseMeta {
            smoothing_iterations: 50,
            step_size: 1.0,
            reliability_floor: 0.0,
            disambiguation: "boundary".into(),
            reliability_source: "confidence stage".into(),
        };
        write_fused(&dir, &sample.gt_normals, &fuse_meta).unwrap();
        assert!(dir.join(FUSED_PREVIEW_FILE).exists());
        let back = read_fused(&dir).unwrap();
        assert_eq!(back.valid_count(), sample.gt_normals.valid_count());
    }

    #[test]
    fn missing_inputs_are_reported_as_data_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let err = read_sample_stack(tmp.path()).unwrap_err();
        assert!(err.is_data_error());
        assert!(err.to_string().contains("0.png"));
        let err = read_prior(tmp.path()).unwrap_err();
        assert!(err.is_data_error());
        assert!(err.to_string().contains(CANDIDATE_FILES[0]));
    }

    #[test]
    fn render_job_defaults() {
        let job: RenderJob = serde_json::from_str(
            r#"{
                "name": "ball",
                "scene": {
                    "shape": {"kind": "hemisphere", "radius": 10.0, "center": [12.0, 12.0]},
                    "width": 24,
                    "height": 24,
                    "seed": 1
                }
            }"#,
        )
        .unwrap();
        assert_eq!(job.rotations_deg, vec![0.0]);
        assert_eq!(job.scene.n, 1.52);
        assert_eq!(job.scene.mean_intensity, 0.35);
    }
}
