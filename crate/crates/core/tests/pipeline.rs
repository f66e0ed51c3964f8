//! In-process runs of the whole estimation chain, including a scene that
//! mixes shapes, checking that each stage composes with the next.

use polarsfp::confidence::{noise_density, normalize_confidence, ReliabilityMap};
use polarsfp::fresnel::{prior_candidates, GLASS};
use polarsfp::fuse::{disambiguate_boundary, disambiguate_oracle, fuse, FusionConfig};
use polarsfp::metrics::{angular_error_map, summarize, DEFAULT_THRESHOLDS_DEG};
use polarsfp::raster::Plane;
use polarsfp::stokes::compute_features;
use polarsfp::synth::{render, Quantization, SceneSpec, Shape, TransmissionModel};

fn composite_scene(corrupted: bool, seed: u64) -> SceneSpec {
    SceneSpec {
        // A tilted slab filling the frame with a hemisphere resting on it.
        shape: Shape::Composite {
            shapes: vec![
                Shape::TiltedPlane {
                    zenith: 0.4,
                    azimuth: 1.0,
                },
                Shape::Hemisphere {
                    radius: 26.0,
                    center: (32.0, 32.0),
                },
            ],
        },
        width: 64,
        height: 64,
        n: 1.52,
        mean_intensity: 0.35,
        transmission: TransmissionModel {
            enabled: corrupted,
            zenith_threshold: 20f64.to_radians(),
            flip_probability: 0.5,
            aolp_noise_sigma: 0.1,
        },
        quantization: Quantization::None,
        seed,
    }
}

fn chain_mae(estimate: &polarsfp::raster::NormalMap, sample: &polarsfp::synth::RenderedSample) -> f64 {
    let (errors, mask) = angular_error_map(estimate, &sample.gt_normals).unwrap();
    summarize(&errors, &mask, DEFAULT_THRESHOLDS_DEG)
        .unwrap()
        .mae_deg
}

#[test]
fn reliability_gating_repairs_the_corrupted_region() {
    let sample = render(&composite_scene(true, 99)).unwrap();
    // Corruption only reaches the hemisphere cap: the slab's slope is
    // outside the faulted zenith range.
    assert!(sample.corruption_mask.count_valid() > 100);
    for y in 0..64 {
        for x in 0..64 {
            if sample.corruption_mask.get(x, y) {
                assert!(sample.gt_zenith.get(x, y) < 20f64.to_radians());
            }
        }
    }

    let features = compute_features(&sample.stack).unwrap();
    let mask = sample.gt_normals.mask();
    let candidates = prior_candidates(&features, GLASS, mask).unwrap();
    let prior = disambiguate_boundary(&candidates);

    let density = noise_density(&features.aolp, 9, 0.5, mask).unwrap();
    let reliability = normalize_confidence(&density, mask).unwrap();
    let config = FusionConfig::default();
    let fused = fuse(&prior, &reliability, &config).unwrap();

    let mae_prior = chain_mae(&prior, &sample);
    let mae_fused = chain_mae(&fused, &sample);
    assert!(
        mae_fused < mae_prior,
        "reliability gating did not help: fused {mae_fused} vs prior {mae_prior}"
    );

    // Inside the corrupted region the repair is substantial, not marginal.
    let (prior_err, _) = angular_error_map(&prior, &sample.gt_normals).unwrap();
    let (fused_err, _) = angular_error_map(&fused, &sample.gt_normals).unwrap();
    let mut prior_sum = 0.0;
    let mut fused_sum = 0.0;
    let mut count = 0usize;
    for y in 0..64 {
        for x in 0..64 {
            if sample.corruption_mask.get(x, y) {
                prior_sum += prior_err.get(x, y);
                fused_sum += fused_err.get(x, y);
                count += 1;
            }
        }
    }
    let prior_mean = prior_sum / count as f64;
    let fused_mean = fused_sum / count as f64;
    assert!(
        fused_mean < 0.75 * prior_mean,
        "corrupted-region error {fused_mean} deg barely moved from {prior_mean} deg"
    );
}

#[test]
fn oracle_ceiling_is_tight_on_clean_data() {
    let sample = render(&composite_scene(false, 5)).unwrap();
    let features = compute_features(&sample.stack).unwrap();
    let mask = sample.gt_normals.mask();
    let candidates = prior_candidates(&features, GLASS, mask).unwrap();

    let oracle = disambiguate_oracle(&candidates, &sample.gt_normals).unwrap();
    let mae_oracle = chain_mae(&oracle, &sample);
    assert!(mae_oracle < 0.1, "oracle MAE {mae_oracle} deg");

    // The reference-free mode can only do worse, never better.
    let boundary = disambiguate_boundary(&candidates);
    let mae_boundary = chain_mae(&boundary, &sample);
    assert!(mae_oracle <= mae_boundary + 1e-9);

    // Nor can fusing afterwards dip below the per-pixel ceiling, whatever
    // the smoothing schedule or floor.
    let density = noise_density(&features.aolp, 9, 0.5, mask).unwrap();
    let reliability = normalize_confidence(&density, mask).unwrap();
    for config in [
        FusionConfig::default(),
        FusionConfig {
            reliability_floor: 0.7,
            ..FusionConfig::default()
        },
        FusionConfig {
            smoothing_iterations: 5,
            step_size: 0.3,
            ..FusionConfig::default()
        },
    ] {
        let fused = fuse(&boundary, &reliability, &config).unwrap();
        let mae_fused = chain_mae(&fused, &sample);
        assert!(
            mae_oracle <= mae_fused + 1e-9,
            "a fusion pass undercut the ceiling: {mae_fused} vs {mae_oracle}"
        );
    }
}

#[test]
fn zero_smoothing_makes_fusion_a_no_op() {
    let sample = render(&composite_scene(true, 3)).unwrap();
    let features = compute_features(&sample.stack).unwrap();
    let mask = sample.gt_normals.mask();
    let candidates = prior_candidates(&features, GLASS, mask).unwrap();
    let prior = disambiguate_boundary(&candidates);

    let density = noise_density(&features.aolp, 9, 0.5, mask).unwrap();
    let reliability = normalize_confidence(&density, mask).unwrap();

    // With no smoothing iterations the base field is the prior itself, so
    // any reliability blend lands back on the prior.
    let config = FusionConfig {
        smoothing_iterations: 0,
        ..FusionConfig::default()
    };
    let fused = fuse(&prior, &reliability, &config).unwrap();
    let (width, height) = prior.dims();
    for y in 0..height {
        for x in 0..width {
            assert_eq!(fused.is_valid(x, y), prior.is_valid(x, y));
            if fused.is_valid(x, y) {
                assert!((fused.get(x, y) - prior.get(x, y)).norm() < 1e-12);
            }
        }
    }

    // A reliability floor of almost one pins the output near the prior even
    // with smoothing enabled.
    let pinned = fuse(
        &prior,
        &ReliabilityMap {
            confidence: Plane::from_fn(width, height, |_, _| 1.0),
            reliability: Plane::new(width, height),
            max_density: 1.0,
            degenerate: false,
        },
        &FusionConfig {
            reliability_floor: 0.999,
            ..FusionConfig::default()
        },
    )
    .unwrap();
    let mut worst = 0.0f64;
    for y in 0..height {
        for x in 0..width {
            if pinned.is_valid(x, y) {
                worst = worst.max(
                    pinned
                        .get(x, y)
                        .dot(&prior.get(x, y))
                        .clamp(-1.0, 1.0)
                        .acos(),
                );
            }
        }
    }
    assert!(worst < 0.01, "floor 0.999 allowed {worst} rad of drift");
}
