//! Stage drivers: discover sample directories, run one module stage per
//! sample (in parallel across samples), and mirror the tree into the
//! output root.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use polarsfp::confidence::{noise_density, normalize_confidence, ReliabilityMap};
use polarsfp::dataset::{
    self, ConfidenceMeta, FeaturesMeta, FuseMeta, PriorMeta, RenderJob, SampleMeta,
    FEATURE_FILES, FUSED_FILE, INTENSITY_FILES, NORMALS_GT_FILE, REPORT_JSON_FILE,
    REPORT_TABLE_FILE,
};
use polarsfp::fresnel::{prior_candidates, RefractionIndex};
use polarsfp::fuse::{disambiguate_boundary, disambiguate_oracle, fuse, FusionConfig};
use polarsfp::io;
use polarsfp::metrics::{angular_error_map, render_table, report, ObjectErrors};
use polarsfp::raster::{Mask, NormalMap, Plane};
use polarsfp::stokes::{compute_features, demosaic_pfa, PfaOrientation, RawMosaic};
use polarsfp::synth::sweep;
use polarsfp::{Error, Result};

use crate::{Cli, Command};

const STOKES_CONVENTION: &str =
    "s0 = (i0 + i45 + i90 + i135) / 2, s1 = i0 - i90, s2 = i45 - i135; aolp = atan2(s2, s1) / 2 in [0, pi)";

pub fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .expect("build worker pool");
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Render(args) => render_cmd(args),
        Command::Features(args) => features_cmd(args),
        Command::Prior(args) => prior_cmd(args),
        Command::Confidence(args) => confidence_cmd(args),
        Command::Fuse(args) => fuse_cmd(args),
        Command::Eval(args) => eval_cmd(args),
    }
}

fn io_error(path: &Path, kind: std::io::ErrorKind, message: String) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(kind, message),
    }
}

/// Directories under `root` (including `root` itself) containing any of the
/// marker files, as sorted relative paths. Directories that match are not
/// descended into.
fn discover(root: &Path, markers: &[&str]) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![PathBuf::new()];
    while let Some(rel) = stack.pop() {
        let dir = root.join(&rel);
        if markers.iter().any(|m| dir.join(m).is_file()) {
            found.push(rel);
            continue;
        }
        let entries = fs::read_dir(&dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        let mut children = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?;
            if entry.path().is_dir() {
                children.push(rel.join(entry.file_name()));
            }
        }
        children.sort();
        stack.extend(children.into_iter().rev());
    }
    found.sort();
    if found.is_empty() {
        return Err(io_error(
            root,
            std::io::ErrorKind::NotFound,
            format!("no directories containing {} found", markers.join(" or ")),
        ));
    }
    Ok(found)
}

fn rel_name(rel: &Path) -> String {
    if rel.as_os_str().is_empty() {
        "sample".to_string()
    } else {
        rel.components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/")
    }
}

/// Runs `stage(in_dir, out_dir, rel)` for every discovered sample, in
/// parallel, then prints one status line per sample in path order.
fn for_each_sample<F>(input: &Path, out: &Path, markers: &[&str], stage: F) -> Result<()>
where
    F: Fn(&Path, &Path, &Path) -> Result<String> + Sync,
{
    let rels = discover(input, markers)?;
    let results: Vec<Result<String>> = rels
        .par_iter()
        .map(|rel| stage(&input.join(rel), &out.join(rel), rel))
        .collect();
    for (rel, result) in rels.iter().zip(results) {
        let message = result?;
        println!("{}: {message}", rel_name(rel));
    }
    Ok(())
}

fn render_cmd(args: crate::RenderArgs) -> Result<()> {
    let mut job: RenderJob = dataset::read_json(&args.job)?;
    if let Some(seed) = args.seed {
        job.scene.seed = seed;
    }
    if job.rotations_deg.is_empty() {
        return Err(Error::Scene("render job lists no rotations".into()));
    }
    let rotations_rad: Vec<f64> = job.rotations_deg.iter().map(|d| d.to_radians()).collect();
    let samples = sweep(&job.scene, &rotations_rad)?;
    for (&deg, sample) in job.rotations_deg.iter().zip(&samples) {
        let dir = args
            .out
            .join(&job.name)
            .join(dataset::rotation_dir_name(deg));
        let meta = SampleMeta {
            scene: job.scene.clone(),
            rotation_deg: deg,
        };
        dataset::write_sample(&dir, sample, &meta)?;
        println!(
            "{}/{}: {} valid pixels",
            job.name,
            dataset::rotation_dir_name(deg),
            sample.gt_normals.valid_count()
        );
    }
    Ok(())
}

fn parse_pattern(text: &str) -> Result<[PfaOrientation; 4]> {
    let mut cells = [PfaOrientation::Deg0; 4];
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::InvalidPattern);
    }
    for (cell, part) in cells.iter_mut().zip(parts) {
        *cell = match part {
            "0" => PfaOrientation::Deg0,
            "45" => PfaOrientation::Deg45,
            "90" => PfaOrientation::Deg90,
            "135" => PfaOrientation::Deg135,
            _ => return Err(Error::InvalidPattern),
        };
    }
    Ok(cells)
}

fn features_meta(clamp_count: usize) -> FeaturesMeta {
    FeaturesMeta {
        angles_deg: vec![0.0, 45.0, 90.0, 135.0],
        convention: STOKES_CONVENTION.to_string(),
        clamp_count,
    }
}

fn features_cmd(args: crate::FeaturesArgs) -> Result<()> {
    if let Some(mosaic_path) = &args.mosaic {
        let pattern = parse_pattern(&args.pattern)?;
        let values = io::read_gray_png(mosaic_path)?;
        let stack = demosaic_pfa(&RawMosaic::new(values, pattern)?)?;
        let features = compute_features(&stack)?;
        let (width, height) = stack.dims();
        let mask = Mask::full(width, height);
        dataset::write_features(&args.out, &features, &mask, &features_meta(features.clamp_count))?;
        println!("mosaic: features ({} clamped)", features.clamp_count);
        return Ok(());
    }

    let input = args.input.as_ref().expect("clap enforces input xor mosaic");
    for_each_sample(input, &args.out, &[INTENSITY_FILES[0]], |in_dir, out_dir, _| {
        let (stack, mask) = dataset::read_sample_stack(in_dir)?;
        let features = compute_features(&stack)?;
        dataset::write_features(out_dir, &features, &mask, &features_meta(features.clamp_count))?;
        Ok(format!("features ({} clamped)", features.clamp_count))
    })
}

fn prior_cmd(args: crate::PriorArgs) -> Result<()> {
    let n = RefractionIndex::new(args.n)?;
    let meta = PriorMeta {
        n: n.value(),
        candidate_order: [
            "low-plus".into(),
            "low-minus".into(),
            "high-plus".into(),
            "high-minus".into(),
        ],
    };
    for_each_sample(&args.input, &args.out, &[FEATURE_FILES[0]], |in_dir, out_dir, _| {
        let (features, mask) = dataset::read_features(in_dir)?;
        let candidates = prior_candidates(&features, n, &mask)?;
        dataset::write_prior(out_dir, &candidates, &meta)?;
        Ok(format!("{} candidate pixels", candidates.mask().count_valid()))
    })
}

fn confidence_cmd(args: crate::ConfidenceArgs) -> Result<()> {
    for_each_sample(&args.input, &args.out, &[FEATURE_FILES[0]], |in_dir, out_dir, _| {
        let (features, mask) = dataset::read_features(in_dir)?;
        let density = noise_density(&features.aolp, args.window, args.exponent, &mask)?;
        let reliability = normalize_confidence(&density, &mask)?;
        let meta = ConfidenceMeta {
            window: args.window,
            exponent: args.exponent,
            max_density: reliability.max_density,
            degenerate: reliability.degenerate,
        };
        dataset::write_reliability(out_dir, &reliability, &mask, &meta)?;
        Ok(if reliability.degenerate {
            "degenerate (flat field)".to_string()
        } else {
            format!("max density {:.6}", reliability.max_density)
        })
    })
}

/// Reference normals for a sample: a direct PFM path, a fused artifact, or
/// a rendered sample's reference map.
fn resolve_normals(root: &Path, rel: &Path) -> Result<NormalMap> {
    if root.is_file() {
        return io::read_pfm_normals(root);
    }
    let dir = root.join(rel);
    let fused = dir.join(FUSED_FILE);
    if fused.is_file() {
        return io::read_pfm_normals(&fused);
    }
    io::read_pfm_normals(dir.join(NORMALS_GT_FILE))
}

fn constant_reliability(width: usize, height: usize) -> ReliabilityMap {
    ReliabilityMap {
        confidence: Plane::new(width, height),
        reliability: Plane::from_fn(width, height, |_, _| 1.0),
        max_density: 0.0,
        degenerate: false,
    }
}

fn fuse_cmd(args: crate::FuseArgs) -> Result<()> {
    let config = FusionConfig {
        smoothing_iterations: args.iterations,
        step_size: args.step,
        reliability_floor: args.floor,
    };
    for_each_sample(
        &args.input,
        &args.out,
        &[dataset::CANDIDATE_FILES[0]],
        |in_dir, out_dir, rel| {
            let (candidates, _) = dataset::read_prior(in_dir)?;
            let (disambiguated, mode) = if args.oracle_disambiguation {
                let gt_root = args.gt.as_ref().expect("clap ties --gt to oracle mode");
                let reference = resolve_normals(gt_root, rel)?;
                (disambiguate_oracle(&candidates, &reference)?, "oracle")
            } else {
                (disambiguate_boundary(&candidates), "boundary")
            };
            let (width, height) = candidates.dims();
            let (reliability, source) = match &args.confidence {
                Some(confidence_root) => {
                    let (map, _) = dataset::read_reliability(&confidence_root.join(rel))?;
                    (map, "confidence stage".to_string())
                }
                None => (constant_reliability(width, height), "constant 1".to_string()),
            };
            let fused = fuse(&disambiguated, &reliability, &config)?;
            let meta = FuseMeta {
                smoothing_iterations: config.smoothing_iterations,
                step_size: config.step_size,
                reliability_floor: config.reliability_floor,
                disambiguation: mode.to_string(),
                reliability_source: source,
            };
            dataset::write_fused(out_dir, &fused, &meta)?;
            Ok(format!("fused ({mode} disambiguation)"))
        },
    )
}

fn eval_cmd(args: crate::EvalArgs) -> Result<()> {
    let thresholds: [f64; 3] = args
        .thresholds
        .clone()
        .try_into()
        .expect("clap enforces three thresholds");
    let rels = if args.est.is_file() {
        vec![PathBuf::new()]
    } else {
        discover(&args.est, &[FUSED_FILE, NORMALS_GT_FILE])?
    };
    let objects: Vec<ObjectErrors> = rels
        .par_iter()
        .map(|rel| {
            let est = resolve_normals(&args.est, rel)?;
            let gt = resolve_normals(&args.gt, rel)?;
            let (errors, mask) = angular_error_map(&est, &gt)?;
            Ok(ObjectErrors {
                name: rel_name(rel),
                errors,
                mask,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = report(&objects, thresholds)?;

    fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    dataset::write_json(args.out.join(REPORT_JSON_FILE), &report)?;
    let table = render_table(&report);
    fs::write(args.out.join(REPORT_TABLE_FILE), &table).map_err(|source| Error::Io {
        path: args.out.join(REPORT_TABLE_FILE),
        source,
    })?;
    print!("{table}");
    Ok(())
}
