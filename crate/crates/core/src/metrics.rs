//! Angular-error metrics between normal maps.
//!
//! Errors are measured per pixel as the angle between estimated and
//! reference normals, in degrees. Summaries report the mean, the lower
//! median, and the share of pixels strictly below each accuracy threshold.
//! Multi-object reports expose both pooling conventions side by side:
//! all pixels thrown together, and the unweighted mean over objects.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::raster::{check_dims, Mask, NormalMap, Plane};
use crate::{Error, Result};

/// Accuracy thresholds, in degrees, used when none are given explicitly.
pub const DEFAULT_THRESHOLDS_DEG: [f64; 3] = [11.25, 22.5, 30.0];

/// Error statistics over one set of pixels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    /// Mean angular error, degrees.
    pub mae_deg: f64,
    /// Lower median of the angular error, degrees: element `(n - 1) / 2` of
    /// the sorted errors, so it is always an observed value.
    pub median_deg: f64,
    /// Accuracy thresholds, degrees, matching `accuracy_pct` by position.
    pub thresholds_deg: [f64; 3],
    /// Percentage of pixels with error strictly below each threshold.
    pub accuracy_pct: [f64; 3],
    /// Number of pixels the summary covers.
    pub valid_pixels: usize,
}

/// Metrics for a collection of objects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Statistics over every valid pixel of every object pooled together.
    pub pooled: MetricsSummary,
    /// Arithmetic mean of the per-object statistics (each object counts
    /// once regardless of its pixel count); `valid_pixels` is the total.
    pub object_mean: MetricsSummary,
    /// Per-object statistics, keyed by object name.
    pub per_object: BTreeMap<String, MetricsSummary>,
}

/// Errors and mask for one named object, as consumed by [`report`].
pub struct ObjectErrors {
    pub name: String,
    pub errors: Plane,
    pub mask: Mask,
}

/// Per-pixel angle between the two fields, in degrees, over the
/// intersection of the masks.
pub fn angular_error_map(estimate: &NormalMap, reference: &NormalMap) -> Result<(Plane, Mask)> {
    let (width, height) = estimate.dims();
    check_dims("metrics reference", (width, height), reference.dims())?;
    let mut errors = Plane::new(width, height);
    let mut mask = Mask::new(width, height);
    for y in 0..height {
        for x in 0..width {
            if !estimate.is_valid(x, y) || !reference.is_valid(x, y) {
                continue;
            }
            let a = estimate.get(x, y);
            let b = reference.get(x, y);
            let denom = a.norm() * b.norm();
            if denom == 0.0 {
                continue;
            }
            let cosine = (a.dot(&b) / denom).clamp(-1.0, 1.0);
            errors.set(x, y, cosine.acos().to_degrees());
            mask.set(x, y, true);
        }
    }
    Ok((errors, mask))
}

fn summarize_values(values: &mut Vec<f64>, thresholds_deg: [f64; 3]) -> Result<MetricsSummary> {
    if values.is_empty() {
        return Err(Error::NoValidPixels);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    values.sort_unstable_by(f64::total_cmp);
    let median = values[(n - 1) / 2];
    let mut accuracy_pct = [0.0; 3];
    for (slot, &threshold) in accuracy_pct.iter_mut().zip(thresholds_deg.iter()) {
        let below = values.iter().filter(|&&v| v < threshold).count();
        *slot = below as f64 * 100.0 / n as f64;
    }
    Ok(MetricsSummary {
        mae_deg: mean,
        median_deg: median,
        thresholds_deg,
        accuracy_pct,
        valid_pixels: n,
    })
}

/// Summarizes the masked pixels of an error plane.
pub fn summarize(errors: &Plane, mask: &Mask, thresholds_deg: [f64; 3]) -> Result<MetricsSummary> {
    check_dims("metrics mask", errors.dims(), mask.dims())?;
    let (width, height) = errors.dims();
    let mut values = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if mask.get(x, y) {
                values.push(errors.get(x, y));
            }
        }
    }
    summarize_values(&mut values, thresholds_deg)
}

/// Builds the full report for a set of objects: pooled, per object, and the
/// unweighted object mean.
pub fn report(objects: &[ObjectErrors], thresholds_deg: [f64; 3]) -> Result<MetricsReport> {
    if objects.is_empty() {
        return Err(Error::NoValidPixels);
    }
    let mut per_object = BTreeMap::new();
    let mut pooled_values = Vec::new();
    for object in objects {
        check_dims("metrics mask", object.errors.dims(), object.mask.dims())?;
        let (width, height) = object.errors.dims();
        let mut values = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if object.mask.get(x, y) {
                    values.push(object.errors.get(x, y));
                }
            }
        }
        pooled_values.extend_from_slice(&values);
        let summary = summarize_values(&mut values, thresholds_deg)?;
        per_object.insert(object.name.clone(), summary);
    }
    let pooled = summarize_values(&mut pooled_values, thresholds_deg)?;

    let count = per_object.len() as f64;
    let mut object_mean = MetricsSummary {
        mae_deg: 0.0,
        median_deg: 0.0,
        thresholds_deg,
        accuracy_pct: [0.0; 3],
        valid_pixels: 0,
    };
    for summary in per_object.values() {
        object_mean.mae_deg += summary.mae_deg / count;
        object_mean.median_deg += summary.median_deg / count;
        for k in 0..3 {
            object_mean.accuracy_pct[k] += summary.accuracy_pct[k] / count;
        }
        object_mean.valid_pixels += summary.valid_pixels;
    }

    Ok(MetricsReport {
        pooled,
        object_mean,
        per_object,
    })
}

/// Plain-text table: one column per object plus the two pooled columns, one
/// row per statistic.
pub fn render_table(report: &MetricsReport) -> String {
    let mut columns: Vec<(String, &MetricsSummary)> = report
        .per_object
        .iter()
        .map(|(name, summary)| (name.clone(), summary))
        .collect();
    columns.push(("all (pixels)".to_string(), &report.pooled));
    columns.push(("all (objects)".to_string(), &report.object_mean));

    let value_width = columns
        .iter()
        .map(|(name, _)| name.len())
        .max()
        .unwrap_or(0)
        .max(12);
    let label_width = 14;

    let mut out = String::new();
    out.push_str(&format!("{:<label_width$}", "metric"));
    for (name, _) in &columns {
        out.push_str(&format!("  {name:>value_width$}"));
    }
    out.push('\n');

    let mut push_row = |label: String, values: Vec<f64>| {
        out.push_str(&format!("{label:<label_width$}"));
        for v in values {
            out.push_str(&format!("  {v:>value_width$.3}"));
        }
        out.push('\n');
    };

    push_row(
        "mae (deg)".to_string(),
        columns.iter().map(|(_, s)| s.mae_deg).collect(),
    );
    push_row(
        "median (deg)".to_string(),
        columns.iter().map(|(_, s)| s.median_deg).collect(),
    );
    let thresholds = report.pooled.thresholds_deg;
    for k in 0..3 {
        push_row(
            format!("acc < {:.2}", thresholds[k]),
            columns.iter().map(|(_, s)| s.accuracy_pct[k]).collect(),
        );
    }
    out.push_str(&format!("{:<label_width$}", "pixels"));
    for (_, s) in &columns {
        out.push_str(&format!("  {:>value_width$}", s.valid_pixels));
    }
    out.push('\n');
    out
}
