//! Candidate disambiguation and reliability-gated fusion.
//!
//! The Fresnel prior leaves four candidates per pixel (two zenith branches,
//! two azimuth branches). [`disambiguate_boundary`] resolves both choices
//! from scratch: object silhouettes of convex-ish shapes face outward, so
//! the outward image-space boundary normal anchors the azimuth at the rim
//! and the choice propagates inward by breadth-first consistency; the zenith
//! branch falls from the high branch near the rim to the low branch deep
//! inside. [`disambiguate_oracle`] instead picks the candidate closest to a
//! reference field and exists for testing ceilings.
//!
//! [`fuse`] then blends the disambiguated prior with a smoothed copy of
//! itself, weighting the prior by per-pixel reliability: where the AoLP is
//! locally noisy the prior is distrusted and the smooth field takes over.

use std::collections::VecDeque;

use nalgebra::Vector3;

use crate::confidence::ReliabilityMap;
use crate::fresnel::{candidate_index, AzimuthBranch, PriorCandidates, ZenithBranch};
use crate::raster::{check_dims, NormalMap};
use crate::{Error, Result};

use std::f64::consts::{PI, TAU};

/// Parameters of [`fuse`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    /// Iterations of neighborhood averaging that build the smooth base field.
    pub smoothing_iterations: usize,
    /// Blend factor per smoothing iteration, in `(0, 1]`.
    pub step_size: f64,
    /// Minimum reliability granted to every pixel, in `[0, 1)`; 0 leaves the
    /// measured reliability untouched.
    pub reliability_floor: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            smoothing_iterations: 50,
            step_size: 1.0,
            reliability_floor: 0.0,
        }
    }
}

impl FusionConfig {
    fn validate(&self) -> Result<()> {
        if !self.step_size.is_finite() || !(0.0..=1.0).contains(&self.step_size) || self.step_size == 0.0 {
            return Err(Error::StepSize { got: self.step_size });
        }
        if !self.reliability_floor.is_finite() || !(0.0..1.0).contains(&self.reliability_floor) {
            return Err(Error::ReliabilityFloor {
                got: self.reliability_floor,
            });
        }
        Ok(())
    }
}

#[inline]
fn wrap_signed(angle: f64) -> f64 {
    // Into [-pi, pi).
    (angle + PI).rem_euclid(TAU) - PI
}

/// Azimuth of the `+` candidate at a pixel, read off the high-zenith map
/// whose in-plane component is never degenerate.
#[inline]
fn plus_azimuth(candidates: &PriorCandidates, x: usize, y: usize) -> f64 {
    let n = candidates.maps[candidate_index(ZenithBranch::High, AzimuthBranch::Plus)].get(x, y);
    n.y.atan2(n.x)
}

/// Resolves the four-way ambiguity without any reference data.
///
/// Azimuth: boundary pixels take the candidate closer to the outward
/// image-space boundary normal; interior pixels take the candidate closer to
/// the circular mean of their already-decided neighbors, visiting pixels by
/// breadth-first distance from the boundary (row-major within a distance
/// level). Exact ties, including an empty reference, fall to the `+`
/// (aolp + pi/2) branch.
///
/// Zenith: pixels deeper than half the maximum boundary distance take the
/// low branch, the rest the high branch, matching convex objects that are
/// camera-facing at the center and grazing at the rim.
pub fn disambiguate_boundary(candidates: &PriorCandidates) -> NormalMap {
    let (width, height) = candidates.dims();
    let mask = candidates.mask();
    let mut output = NormalMap::new(width, height);
    if mask.count_valid() == 0 {
        return output;
    }

    let idx = |x: usize, y: usize| y * width + x;

    // Multi-source BFS distance to the nearest invalid pixel or image edge
    // (4-neighborhood), in whole pixels; 0 marks invalid pixels.
    let mut dist = vec![0u32; width * height];
    let mut queue = VecDeque::new();
    for y in 0..height {
        for x in 0..width {
            if !mask.get(x, y) {
                continue;
            }
            let at_border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
            let touches_invalid = [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)].iter().any(|&(dx, dy)| {
                let nx = x as i32 + dx;
                let ny = y as i32 + dy;
                nx >= 0
                    && ny >= 0
                    && (nx as usize) < width
                    && (ny as usize) < height
                    && !mask.get(nx as usize, ny as usize)
            });
            if at_border || touches_invalid {
                dist[idx(x, y)] = 1;
                queue.push_back((x, y));
            }
        }
    }
    // Degenerate but possible: a mask covering the whole frame interior-out.
    if queue.is_empty() {
        for y in 0..height {
            for x in 0..width {
                if mask.get(x, y) {
                    dist[idx(x, y)] = 1;
                    queue.push_back((x, y));
                }
            }
        }
    }
    let mut max_dist = 1u32;
    {
        let mut bfs = queue.clone();
        while let Some((x, y)) = bfs.pop_front() {
            let d = dist[idx(x, y)];
            max_dist = max_dist.max(d);
            for (dx, dy) in [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)] {
                let nx = x as i32 + dx;
                let ny = y as i32 + dy;
                if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if mask.get(nx, ny) && dist[idx(nx, ny)] == 0 {
                    dist[idx(nx, ny)] = d + 1;
                    bfs.push_back((nx, ny));
                }
            }
        }
    }

    // Azimuth propagation in level order, row-major inside each level.
    let mut chosen_azimuth = vec![f64::NAN; width * height];
    let mut decided = vec![false; width * height];
    let mut level: Vec<(usize, usize)> = queue.into_iter().collect();
    let mut level_no = 1u32;
    while !level.is_empty() {
        level.sort_unstable_by_key(|&(x, y)| (y, x));
        for &(x, y) in &level {
            let reference = if level_no == 1 {
                let mut ox = 0.0;
                let mut oy = 0.0;
                let mut any = false;
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = x as i32 + dx;
                        let ny = y as i32 + dy;
                        let outside = nx < 0
                            || ny < 0
                            || nx as usize >= width
                            || ny as usize >= height
                            || !mask.get(nx as usize, ny as usize);
                        if outside {
                            ox += dx as f64;
                            oy += dy as f64;
                            any = true;
                        }
                    }
                }
                if any && ox.hypot(oy) > 1e-9 {
                    Some(oy.atan2(ox))
                } else {
                    None
                }
            } else {
                let mut sx = 0.0;
                let mut sy = 0.0;
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = x as i32 + dx;
                        let ny = y as i32 + dy;
                        if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                            continue;
                        }
                        let ni = idx(nx as usize, ny as usize);
                        if decided[ni] {
                            sx += chosen_azimuth[ni].cos();
                            sy += chosen_azimuth[ni].sin();
                        }
                    }
                }
                if sx.hypot(sy) > 1e-9 {
                    Some(sy.atan2(sx))
                } else {
                    None
                }
            };

            let a_plus = plus_azimuth(candidates, x, y);
            let branch = match reference {
                // The minus candidate sits exactly half a turn away, so the
                // plus branch wins whenever it is within a quarter turn of
                // the reference (ties included).
                Some(r) => {
                    if wrap_signed(a_plus - r).abs() <= PI / 2.0 {
                        AzimuthBranch::Plus
                    } else {
                        AzimuthBranch::Minus
                    }
                }
                None => AzimuthBranch::Plus,
            };
            let i = idx(x, y);
            chosen_azimuth[i] = match branch {
                AzimuthBranch::Plus => a_plus,
                AzimuthBranch::Minus => wrap_signed(a_plus + PI),
            };
            decided[i] = true;
        }

        level_no += 1;
        let mut next = Vec::new();
        for &(x, y) in &level {
            for (dx, dy) in [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)] {
                let nx = x as i32 + dx;
                let ny = y as i32 + dy;
                if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if mask.get(nx, ny) && dist[idx(nx, ny)] == level_no && !decided[idx(nx, ny)] {
                    if !next.contains(&(nx, ny)) {
                        next.push((nx, ny));
                    }
                }
            }
        }
        level = next;
    }

    // Zenith branch from the normalized interior depth, then emit the chosen
    // candidate.
    for y in 0..height {
        for x in 0..width {
            if !mask.get(x, y) {
                continue;
            }
            let i = idx(x, y);
            let depth = dist[i] as f64 / max_dist as f64;
            let zenith = if depth > 0.5 {
                ZenithBranch::Low
            } else {
                ZenithBranch::High
            };
            let a_plus = plus_azimuth(candidates, x, y);
            let azimuth = if wrap_signed(chosen_azimuth[i] - a_plus).abs() < PI / 2.0 {
                AzimuthBranch::Plus
            } else {
                AzimuthBranch::Minus
            };
            output.set(x, y, candidates.maps[candidate_index(zenith, azimuth)].get(x, y));
        }
    }
    output
}

/// Picks, per pixel, the candidate with the smallest angle to `reference`.
///
/// Test-only ceiling: it tells how good the prior could get with perfect
/// disambiguation. Pixels where the reference is invalid default to the
/// `(low, +)` candidate.
pub fn disambiguate_oracle(candidates: &PriorCandidates, reference: &NormalMap) -> Result<NormalMap> {
    let (width, height) = candidates.dims();
    check_dims("oracle reference", (width, height), reference.dims())?;
    let mut output = NormalMap::new(width, height);
    for y in 0..height {
        for x in 0..width {
            if !candidates.mask().get(x, y) {
                continue;
            }
            let pick = if reference.is_valid(x, y) {
                let truth = reference.get(x, y);
                let mut best = 0usize;
                let mut best_dot = f64::NEG_INFINITY;
                for (k, map) in candidates.maps.iter().enumerate() {
                    let dot = map.get(x, y).dot(&truth);
                    if dot > best_dot {
                        best_dot = dot;
                        best = k;
                    }
                }
                best
            } else {
                0
            };
            output.set(x, y, candidates.maps[pick].get(x, y));
        }
    }
    Ok(output)
}

/// Iterative masked neighborhood averaging with renormalization.
///
/// Each iteration replaces every valid pixel by the renormalized blend of
/// itself toward the average of itself and its valid 4-neighbors
/// (`step` = 1 is the plain average). Invalid pixels neither move nor
/// contribute. Zero iterations return the field unchanged.
pub fn smooth_field(field: &NormalMap, iterations: usize, step: f64) -> Result<NormalMap> {
    if !step.is_finite() || !(0.0..=1.0).contains(&step) || step == 0.0 {
        return Err(Error::StepSize { got: step });
    }
    let (width, height) = field.dims();
    let mut current = field.clone();
    for _ in 0..iterations {
        let mut next = current.clone();
        for y in 0..height {
            for x in 0..width {
                if !current.is_valid(x, y) {
                    continue;
                }
                let mut sum = current.get(x, y);
                let mut count = 1.0;
                for (dx, dy) in [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)] {
                    let nx = x as i32 + dx;
                    let ny = y as i32 + dy;
                    if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                        continue;
                    }
                    if current.is_valid(nx as usize, ny as usize) {
                        sum += current.get(nx as usize, ny as usize);
                        count += 1.0;
                    }
                }
                let average = sum / count;
                let blended = current.get(x, y) * (1.0 - step) + average * step;
                let norm = blended.norm();
                if norm > 1e-12 {
                    next.set(x, y, blended / norm);
                }
            }
        }
        current = next;
    }
    Ok(current)
}

/// Reliability-gated blend of a prior normal against a smooth base normal.
/// Near-cancelling blends (antipodal inputs at r close to 1/2) fall back to
/// the base.
#[inline]
fn blend_normals(prior: Vector3<f64>, base: Vector3<f64>, reliability: f64) -> Vector3<f64> {
    if reliability >= 1.0 {
        return prior;
    }
    if reliability <= 0.0 {
        return base;
    }
    let v = prior * reliability + base * (1.0 - reliability);
    let norm = v.norm();
    if norm < 1e-8 {
        base
    } else {
        v / norm
    }
}

/// Blends the disambiguated prior with a smoothed copy of itself, giving the
/// prior weight `max(r, reliability_floor)` per pixel.
///
/// `r = 1` returns the prior unchanged; `r = 0` returns the smooth field.
pub fn fuse(
    prior: &NormalMap,
    reliability: &ReliabilityMap,
    config: &FusionConfig,
) -> Result<NormalMap> {
    config.validate()?;
    let (width, height) = prior.dims();
    check_dims("reliability plane", (width, height), reliability.reliability.dims())?;

    let smooth = smooth_field(prior, config.smoothing_iterations, config.step_size)?;
    let mut output = NormalMap::new(width, height);
    for y in 0..height {
        for x in 0..width {
            if !prior.is_valid(x, y) {
                continue;
            }
            let r = reliability
                .reliability
                .get(x, y)
                .clamp(0.0, 1.0)
                .max(config.reliability_floor);
            output.set(x, y, blend_normals(prior.get(x, y), smooth.get(x, y), r));
        }
    }
    Ok(output)
}

/// Sum over both-valid pixels of `1 - cos(angle between the fields)`.
pub fn angular_loss(estimate: &NormalMap, reference: &NormalMap) -> Result<f64> {
    let (width, height) = estimate.dims();
    check_dims("angular loss reference", (width, height), reference.dims())?;
    let mut loss = 0.0;
    for y in 0..height {
        for x in 0..width {
            if !estimate.is_valid(x, y) || !reference.is_valid(x, y) {
                continue;
            }
            let a = estimate.get(x, y);
            let b = reference.get(x, y);
            let denom = a.norm() * b.norm();
            if denom > 0.0 {
                loss += 1.0 - a.dot(&b) / denom;
            }
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    use crate::fresnel::{
        azimuth_candidates, normal_from_angles, prior_candidates, GLASS, CANDIDATE_BRANCHES,
    };
    use crate::raster::Mask;
    use crate::rng::SplitMix64;
    use crate::synth::{render, Quantization, SceneSpec, Shape, TransmissionModel};

    /// Hand-built candidate set from per-pixel (aolp, zenith pair).
    fn candidates_from(
        width: usize,
        height: usize,
        mask: &Mask,
        angles: impl Fn(usize, usize) -> (f64, f64, f64), // (aolp, low zenith, high zenith)
    ) -> PriorCandidates {
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
                let (aolp, low, high) = angles(x, y);
                let (a_plus, a_minus) = azimuth_candidates(aolp);
                for (k, (zb, ab)) in CANDIDATE_BRANCHES.iter().enumerate() {
                    let theta = match zb {
                        crate::fresnel::ZenithBranch::Low => low,
                        crate::fresnel::ZenithBranch::High => high,
                    };
                    let azimuth = match ab {
                        AzimuthBranch::Plus => a_plus,
                        AzimuthBranch::Minus => a_minus,
                    };
                    maps[k].set(x, y, normal_from_angles(theta, azimuth));
                }
            }
        }
        PriorCandidates { maps }
    }

    #[test]
    fn single_pixel_mask_takes_low_plus() {
        let mut mask = Mask::new(5, 5);
        mask.set(2, 2, true);
        let candidates = candidates_from(5, 5, &mask, |_, _| (0.3, 0.4, 1.3));
        let out = disambiguate_boundary(&candidates);
        assert!(out.is_valid(2, 2));
        let expected = candidates.maps[0].get(2, 2); // (low, +)
        assert_abs_diff_eq!((out.get(2, 2) - expected).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(out.valid_count(), 1);
    }

    #[test]
    fn empty_mask_yields_empty_map() {
        let mask = Mask::new(4, 4);
        let candidates = candidates_from(4, 4, &mask, |_, _| (0.0, 0.1, 1.2));
        let out = disambiguate_boundary(&candidates);
        assert_eq!(out.valid_count(), 0);
    }

    fn noiseless_hemisphere(size: usize, radius: f64) -> (PriorCandidates, crate::synth::RenderedSample) {
        let spec = SceneSpec {
            shape: Shape::Hemisphere {
                radius,
                center: (size as f64 / 2.0, size as f64 / 2.0),
            },
            width: size,
            height: size,
            n: GLASS.value(),
            mean_intensity: 0.35,
            transmission: TransmissionModel {
                enabled: false,
                ..TransmissionModel::default()
            },
            quantization: Quantization::None,
            seed: 3,
        };
        let sample = render(&spec).unwrap();
        let features = crate::stokes::compute_features(&sample.stack).unwrap();
        let candidates = prior_candidates(&features, GLASS, sample.gt_normals.mask()).unwrap();
        (candidates, sample)
    }

    #[test]
    fn boundary_propagation_recovers_hemisphere_azimuth() {
        let (candidates, sample) = noiseless_hemisphere(128, 52.0);
        let out = disambiguate_boundary(&candidates);

        let mut correct = 0usize;
        let mut total = 0usize;
        for y in 0..128 {
            for x in 0..128 {
                if !out.is_valid(x, y) {
                    continue;
                }
                total += 1;
                let chosen = out.get(x, y);
                let truth_azimuth = sample.gt_azimuth.get(x, y);
                let chosen_azimuth = chosen.y.atan2(chosen.x);
                if wrap_signed(chosen_azimuth - truth_azimuth).abs() < PI / 2.0 {
                    correct += 1;
                }
            }
        }
        assert!(total > 8000);
        let rate = correct as f64 / total as f64;
        assert!(rate >= 0.99, "azimuth branch correct at {rate}");
    }

    #[test]
    fn oracle_matches_per_pixel_argmin() {
        let (candidates, sample) = noiseless_hemisphere(48, 20.0);
        let out = disambiguate_oracle(&candidates, &sample.gt_normals).unwrap();
        for y in 0..48 {
            for x in 0..48 {
                if !out.is_valid(x, y) {
                    continue;
                }
                let truth = sample.gt_normals.get(x, y);
                let err = out.get(x, y).dot(&truth).clamp(-1.0, 1.0).acos();
                let best = candidates
                    .maps
                    .iter()
                    .map(|m| m.get(x, y).dot(&truth).clamp(-1.0, 1.0).acos())
                    .fold(f64::INFINITY, f64::min);
                assert_abs_diff_eq!(err, best, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn oracle_beats_or_ties_boundary_mode() {
        let (candidates, sample) = noiseless_hemisphere(64, 26.0);
        let oracle = disambiguate_oracle(&candidates, &sample.gt_normals).unwrap();
        let boundary = disambiguate_boundary(&candidates);
        let oracle_loss = angular_loss(&oracle, &sample.gt_normals).unwrap();
        let boundary_loss = angular_loss(&boundary, &sample.gt_normals).unwrap();
        assert!(
            oracle_loss <= boundary_loss + 1e-9,
            "oracle {oracle_loss} vs boundary {boundary_loss}"
        );
    }

    #[test]
    fn smoothing_keeps_constant_fields() {
        let mut field = NormalMap::new(8, 8);
        let n = Vector3::new(0.6, 0.0, 0.8);
        for y in 0..8 {
            for x in 0..8 {
                field.set(x, y, n);
            }
        }
        let out = smooth_field(&field, 25, 1.0).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert!((out.get(x, y) - n).norm() < 1e-12);
            }
        }
        // Zero iterations: bit-identical.
        let out = smooth_field(&field, 0, 0.5).unwrap();
        assert_eq!(&out, &field);
    }

    #[test]
    fn smoothing_contracts_salt_noise_monotonically() {
        let up = Vector3::new(0.0, 0.0, 1.0);
        let tilted = Vector3::new(1.0, 0.0, 1.0).normalize();
        let mut field = NormalMap::new(20, 20);
        for y in 0..20 {
            for x in 0..20 {
                field.set(x, y, up);
            }
        }
        for (x, y) in [(3, 4), (11, 7), (16, 15), (5, 14), (9, 9)] {
            field.set(x, y, tilted);
        }

        let max_deviation = |f: &NormalMap| {
            let mut worst = 0.0f64;
            for y in 0..20 {
                for x in 0..20 {
                    worst = worst.max(f.get(x, y).dot(&up).clamp(-1.0, 1.0).acos());
                }
            }
            worst
        };

        let initial = max_deviation(&field);
        let mut current = field;
        let mut previous = initial;
        for _ in 0..30 {
            current = smooth_field(&current, 1, 1.0).unwrap();
            let now = max_deviation(&current);
            assert!(now <= previous + 1e-12, "deviation rose: {previous} -> {now}");
            previous = now;
        }
        assert!(previous < 0.5 * initial, "{previous} vs initial {initial}");
    }

    #[test]
    fn fusion_gates_between_prior_and_smooth() {
        let (candidates, _) = noiseless_hemisphere(32, 13.0);
        let prior = disambiguate_boundary(&candidates);
        let config = FusionConfig::default();

        let ones = ReliabilityMap {
            confidence: crate::raster::Plane::new(32, 32),
            reliability: crate::raster::Plane::from_fn(32, 32, |_, _| 1.0),
            max_density: 1.0,
            degenerate: false,
        };
        let fused = fuse(&prior, &ones, &config).unwrap();
        assert_eq!(&fused, &prior);

        let zeros = ReliabilityMap {
            confidence: crate::raster::Plane::from_fn(32, 32, |_, _| 1.0),
            reliability: crate::raster::Plane::new(32, 32),
            max_density: 1.0,
            degenerate: false,
        };
        let fused = fuse(&prior, &zeros, &config).unwrap();
        let smooth = smooth_field(&prior, config.smoothing_iterations, config.step_size).unwrap();
        assert_eq!(&fused, &smooth);
    }

    #[test]
    fn blend_stays_in_the_candidate_plane_and_tracks_reliability() {
        let mut rng = SplitMix64::new(0xB1E);
        for _ in 0..500 {
            let p = normal_from_angles(rng.next_range(0.0, 1.5), rng.next_range(0.0, TAU));
            let s = normal_from_angles(rng.next_range(0.0, 1.5), rng.next_range(0.0, TAU));
            let r1 = rng.next_f64();
            let r2 = rng.next_f64();
            let (r_low, r_high) = if r1 < r2 { (r1, r2) } else { (r2, r1) };

            let f = blend_normals(p, s, r_high);
            assert_abs_diff_eq!(f.norm(), 1.0, epsilon = 1e-12);
            // Coplanar with the two inputs.
            assert_abs_diff_eq!(f.dot(&p.cross(&s)), 0.0, epsilon = 1e-9);
            // More reliability never moves the blend away from the prior.
            let f_low = blend_normals(p, s, r_low);
            let angle_high = f.dot(&p).clamp(-1.0, 1.0).acos();
            let angle_low = f_low.dot(&p).clamp(-1.0, 1.0).acos();
            assert!(angle_high <= angle_low + 1e-9);
        }
    }

    #[test]
    fn near_cancelling_blend_falls_back_to_base() {
        let p = Vector3::new(1.0, 0.0, 0.0);
        let s = Vector3::new(-1.0, 0.0, 0.0);
        let f = blend_normals(p, s, 0.5);
        assert_eq!(f, s);
    }

    #[test]
    fn scaling_reliability_preserves_the_extremes() {
        let p = normal_from_angles(0.9, 1.0);
        let s = normal_from_angles(0.2, 4.0);
        for k in [0.1, 0.5, 0.9, 1.0] {
            // r = 0 pixels are exactly the smooth field under any scaling.
            assert_eq!(blend_normals(p, s, 0.0 * k), s);
            // r = 1 pixels keep the prior dominant while the scale stays
            // at or above one half.
            if k >= 0.5 {
                let f = blend_normals(p, s, k);
                assert!(f.dot(&p) >= f.dot(&s) - 1e-12);
            }
        }
    }

    #[test]
    fn config_is_validated() {
        let prior = NormalMap::new(2, 2);
        let rel = ReliabilityMap {
            confidence: crate::raster::Plane::new(2, 2),
            reliability: crate::raster::Plane::new(2, 2),
            max_density: 0.0,
            degenerate: true,
        };
        let bad_step = FusionConfig {
            step_size: 0.0,
            ..FusionConfig::default()
        };
        assert!(matches!(fuse(&prior, &rel, &bad_step), Err(Error::StepSize { .. })));
        let bad_floor = FusionConfig {
            reliability_floor: 1.0,
            ..FusionConfig::default()
        };
        assert!(matches!(
            fuse(&prior, &rel, &bad_floor),
            Err(Error::ReliabilityFloor { .. })
        ));
        assert!(smooth_field(&prior, 3, 1.5).is_err());
    }

    #[test]
    fn angular_loss_matches_hand_cases() {
        let up = Vector3::new(0.0, 0.0, 1.0);
        let mut a = NormalMap::new(3, 1);
        let mut b = NormalMap::new(3, 1);
        for x in 0..3 {
            a.set(x, 0, up);
        }
        // Identical fields: zero loss.
        for x in 0..3 {
            b.set(x, 0, up);
        }
        assert_abs_diff_eq!(angular_loss(&a, &b).unwrap(), 0.0, epsilon = 1e-15);
        // Orthogonal everywhere: 1 per pixel.
        for x in 0..3 {
            b.set(x, 0, Vector3::new(1.0, 0.0, 0.0));
        }
        assert_abs_diff_eq!(angular_loss(&a, &b).unwrap(), 3.0, epsilon = 1e-12);
        // Antipodal everywhere: 2 per pixel.
        for x in 0..3 {
            b.set(x, 0, Vector3::new(0.0, 0.0, -1.0));
        }
        assert_abs_diff_eq!(angular_loss(&a, &b).unwrap(), 6.0, epsilon = 1e-12);
        // Mismatched shapes are rejected.
        let c = NormalMap::new(2, 1);
        assert!(angular_loss(&a, &c).is_err());
    }
}
