//! Pipeline front end: one subcommand per stage, chained over directories
//! of samples.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, invalid
//! parameters), 2 on data errors (missing or malformed input files).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod pipeline;

#[derive(Parser)]
#[command(name = "polarsfp", version, about = "Shape from polarization for transparent surfaces")]
pub struct Cli {
    /// Worker threads for independent samples (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Render synthetic polarization samples from a scene description.
    Render(RenderArgs),
    /// Recover Stokes planes, DoLP, and AoLP from intensity images.
    Features(FeaturesArgs),
    /// Invert the specular reflection model into four normal candidates.
    Prior(PriorArgs),
    /// Score local AoLP noise into confidence and reliability planes.
    Confidence(ConfidenceArgs),
    /// Disambiguate the candidates and blend with a smoothed field.
    Fuse(FuseArgs),
    /// Compare estimated normals against a reference and report metrics.
    Eval(EvalArgs),
}

#[derive(Args)]
pub struct RenderArgs {
    /// Render job JSON: object name, scene, rotations.
    pub job: PathBuf,
    /// Dataset root; samples land in <out>/<name>/<rotation>/.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the seed recorded in the job.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct FeaturesArgs {
    /// Sample directory, or a tree of them, holding 0/45/90/135.png.
    #[arg(long, required_unless_present = "mosaic", conflicts_with = "mosaic")]
    pub input: Option<PathBuf>,
    /// A single raw polarization-filter-array frame to demosaic instead.
    #[arg(long)]
    pub mosaic: Option<PathBuf>,
    /// 2x2 cell layout of the mosaic: "tl,tr,bl,br" in degrees.
    #[arg(long, default_value = "90,45,135,0")]
    pub pattern: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PriorArgs {
    /// Features directory, or a tree of them.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Refractive index of the surface material.
    #[arg(long, default_value_t = 1.52)]
    pub n: f64,
}

#[derive(Args)]
pub struct ConfidenceArgs {
    /// Features directory, or a tree of them.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Side of the square AoLP neighborhood (odd, >= 3).
    #[arg(long, default_value_t = 9)]
    pub window: usize,
    /// Exponent applied to absolute AoLP deviations.
    #[arg(long, default_value_t = 0.5)]
    pub exponent: f64,
}

#[derive(Args)]
pub struct FuseArgs {
    /// Prior-candidates directory, or a tree of them.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Confidence directory from the confidence stage; omitted, every
    /// pixel gets reliability 1 and the fused map equals the prior.
    #[arg(long)]
    pub confidence: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    /// Smoothing blend factor per iteration, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Minimum reliability granted to every pixel, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub floor: f64,
    /// Pick per-pixel best candidates against a reference (test mode).
    #[arg(long)]
    pub oracle_disambiguation: bool,
    /// Reference normals for --oracle-disambiguation: a sample tree or a
    /// single PFM file.
    #[arg(long, requires = "oracle_disambiguation")]
    pub gt: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Estimated normals: a fused tree, a sample tree, or a PFM file.
    #[arg(long)]
    pub est: PathBuf,
    /// Reference normals, same forms as --est.
    #[arg(long)]
    pub gt: PathBuf,
    /// Where report.json and report.txt go.
    #[arg(long)]
    pub out: PathBuf,
    /// Accuracy thresholds in degrees.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [11.25, 22.5, 30.0])]
    pub thresholds: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match pipeline::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_data_error() { 2 } else { 1 })
        }
    }
}
