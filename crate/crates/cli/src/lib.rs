//! Command-line front end for the denoiser: PNG I/O, noise injection,
//! metrics and a benchmark harness over synthetic or user-supplied images.

use std::fmt;
use std::process::ExitCode;

use eggd_core::color::{denoise_rgb_with, rgb_to_ycbcr, ParamTriplet};
use eggd_core::denoise::{denoise_channel_with, DenoiseOptions, StageTimings};
use eggd_core::metrics::MetricsReport;
use eggd_core::noise::{add_gaussian_noise, NoiseSpec};
use eggd_core::Seed;

use crate::io::Picture;

pub mod args;
pub mod bench;
pub mod commands;
pub mod fixtures;
pub mod io;

pub use commands::run;

/// Failure of a command, split by exit status: bad flags (2) versus
/// anything that went wrong while doing the work (1).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<eggd_core::Error> for CliError {
    fn from(e: eggd_core::Error) -> Self {
        match e {
            eggd_core::Error::InvalidParameter(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Noisy copy of `picture` plus the sigma used and the achieved level.
pub fn noisy_picture(picture: &Picture, spec: &NoiseSpec) -> CliResult<(Picture, f64, f64)> {
    Ok(match picture {
        Picture::Gray(c) => {
            let n = add_gaussian_noise(c, spec)?;
            (Picture::Gray(n.image), n.sigma, n.zeta)
        }
        Picture::Rgb(img) => {
            let n = add_gaussian_noise(img, spec)?;
            (Picture::Rgb(n.image), n.sigma, n.zeta)
        }
    })
}

/// Grayscale input, or `grayscale` set, runs the single-channel pipeline
/// with the luminance parameters; RGB input otherwise goes through YCbCr.
pub fn denoise_picture(
    picture: &Picture,
    params: &ParamTriplet,
    grayscale: bool,
    seed: Seed,
    options: &DenoiseOptions,
) -> CliResult<(Picture, StageTimings)> {
    Ok(match picture {
        Picture::Gray(c) => {
            let r = denoise_channel_with(c, &params.y, seed, options)?;
            (Picture::Gray(r.channel), r.timings)
        }
        Picture::Rgb(img) if grayscale => {
            let luma = rgb_to_ycbcr(img).y;
            let r = denoise_channel_with(&luma, &params.y, seed, options)?;
            (Picture::Gray(r.channel), r.timings)
        }
        Picture::Rgb(img) => {
            let r = denoise_rgb_with(img, params, seed, options)?;
            (Picture::Rgb(r.image), r.timings)
        }
    })
}

pub fn picture_metrics(test: &Picture, reference: Option<&Picture>) -> CliResult<MetricsReport> {
    let report = match (test, reference) {
        (Picture::Gray(t), None) => MetricsReport::compute(t, None),
        (Picture::Rgb(t), None) => MetricsReport::compute(t, None),
        (Picture::Gray(t), Some(Picture::Gray(r))) => MetricsReport::compute(t, Some(r)),
        (Picture::Rgb(t), Some(Picture::Rgb(r))) => MetricsReport::compute(t, Some(r)),
        _ => {
            return Err(CliError::Runtime(anyhow::anyhow!(
                "test and reference images differ in channel count"
            )))
        }
    };
    Ok(report?)
}
