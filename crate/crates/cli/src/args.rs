//! Command-line grammar.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use eggd_core::denoise::{ChannelParams, DEFAULT_OVERSAMPLE};

pub const DEFAULT_MAX_SIDE: usize = 128;

#[derive(Debug, Parser)]
#[command(name = "eggd", version, about = "Geodesic Gramian image denoising")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add Gaussian noise at a fixed sigma or a target relative level.
    AddNoise(AddNoiseArgs),
    /// Denoise an RGB or grayscale PNG.
    Denoise(DenoiseArgs),
    /// Entropy of an image, plus RMSE/PSNR/SSIM against a reference.
    Metrics(MetricsArgs),
    /// Noise, denoise and score every PNG in a directory.
    Bench(BenchArgs),
    /// Write the synthetic test scenes as PNGs.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("level").required(true).args(["zeta", "sigma"])))]
pub struct AddNoiseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Target relative noise in percent, strictly between 0 and 100.
    #[arg(long, value_parser = parse_zeta)]
    pub zeta: Option<f64>,
    /// Standard deviation on the 0-255 scale.
    #[arg(long, value_parser = parse_sigma)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Per-channel parameter overrides, each written `rho,delta,rank`.
#[derive(Debug, Clone, Default, Args)]
pub struct ChannelOverrides {
    /// Luminance parameters (also used for grayscale input).
    #[arg(long, value_parser = parse_params, value_name = "RHO,DELTA,RANK")]
    pub y: Option<ChannelParams>,
    #[arg(long, value_parser = parse_params, value_name = "RHO,DELTA,RANK")]
    pub cb: Option<ChannelParams>,
    #[arg(long, value_parser = parse_params, value_name = "RHO,DELTA,RANK")]
    pub cr: Option<ChannelParams>,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub params: ChannelOverrides,
    /// Start from the published schedule for this noise level; explicit
    /// channel flags take precedence.
    #[arg(long, value_parser = ["2", "4", "6"], default_value = "2")]
    pub preset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
    pub oversample: usize,
    /// Largest accepted image side. Memory grows with the fourth power of
    /// the side.
    #[arg(long, default_value_t = DEFAULT_MAX_SIDE)]
    pub max_side: usize,
    /// Denoise only the luminance and write a grayscale image.
    #[arg(long)]
    pub grayscale: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of clean square PNG images.
    #[arg(long)]
    pub dir: PathBuf,
    /// Relative noise levels in percent.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6", value_parser = parse_zeta)]
    pub zeta: Vec<f64>,
    /// Replace the scheduled parameters of a channel at every level.
    #[command(flatten)]
    pub params: ChannelOverrides,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
    pub oversample: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_SIDE)]
    pub max_side: usize,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::fixtures::FIXTURE_SIDE)]
    pub side: usize,
}

fn parse_zeta(s: &str) -> Result<f64, String> {
    let z: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if z > 0.0 && z < 100.0 {
        Ok(z)
    } else {
        Err(format!(
            "relative noise must lie strictly between 0 and 100, got {z}"
        ))
    }
}

fn parse_sigma(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("sigma must be positive, got {v}"))
    }
}

/// Parses `rho,delta,rank` and checks the image-independent constraints.
pub fn parse_params(s: &str) -> Result<ChannelParams, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [rho, delta, rank] = parts[..] else {
        return Err(format!("expected RHO,DELTA,RANK, got {s:?}"));
    };
    let num = |name: &str, v: &str| v.parse::<usize>().map_err(|e| format!("{name} {v:?}: {e}"));
    let p = ChannelParams::new(num("rho", rho)?, num("delta", delta)?, num("rank", rank)?);
    if p.rho < 3 || p.rho.is_multiple_of(2) {
        return Err(format!(
            "patch side must be odd and at least 3, got {}",
            p.rho
        ));
    }
    if p.delta == 0 || p.rank == 0 {
        return Err("neighbour count and rank must be positive".into());
    }
    Ok(p)
}
