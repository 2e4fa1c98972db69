//! One function per subcommand. Human-readable output goes to `out`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use eggd_core::color::ParamTriplet;
use eggd_core::denoise::{DenoiseOptions, StageTimings};
use eggd_core::noise::NoiseSpec;
use eggd_core::Seed;

use crate::args::{
    AddNoiseArgs, BenchArgs, ChannelOverrides, Cli, Command, DenoiseArgs, FixturesArgs,
    MetricsArgs, ReportFormat,
};
use crate::bench::{run_bench, summarize, write_csv, write_json, BenchConfig};
use crate::fixtures::fixture_set_sized;
use crate::io::{read_picture, write_picture, Picture};
use crate::{denoise_picture, noisy_picture, picture_metrics, CliError, CliResult};

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::AddNoise(a) => add_noise(&a, out),
        Command::Denoise(a) => denoise(&RunConfig::from_args(&a), out),
        Command::Metrics(a) => metrics(&a, out),
        Command::Bench(a) => bench(&a, out),
        Command::Fixtures(a) => fixtures(&a, out),
    }
}

fn add_noise(args: &AddNoiseArgs, out: &mut dyn Write) -> CliResult<()> {
    let clean = read_picture(&args.input)?;
    let seed = Seed(args.seed);
    let spec = match (args.zeta, args.sigma) {
        (Some(z), None) => NoiseSpec::zeta(z, seed),
        (None, Some(s)) => NoiseSpec::sigma(s, seed),
        _ => unreachable!("clap enforces exactly one noise level"),
    };
    let (noisy, sigma, _) = noisy_picture(&clean, &spec)?;
    let written = noisy.quantized();
    write_picture(&args.output, &written)?;
    // Report the level of what was actually written.
    let zeta = match (&clean, &written) {
        (Picture::Gray(c), Picture::Gray(n)) => eggd_core::noise::measure_zeta(c, n)?,
        (Picture::Rgb(c), Picture::Rgb(n)) => eggd_core::noise::measure_zeta(c, n)?,
        _ => unreachable!("noise keeps the channel count"),
    };
    writeln!(out, "zeta {zeta:.4}")?;
    writeln!(out, "sigma {sigma:.4}")?;
    Ok(())
}

/// Everything `denoise` needs, resolved from the flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub params: ParamTriplet,
    pub seed: Seed,
    pub options: DenoiseOptions,
    pub max_side: usize,
    pub grayscale: bool,
}

impl RunConfig {
    pub fn from_args(args: &DenoiseArgs) -> Self {
        let preset = args.preset.parse().expect("clap restricts the preset");
        let base = ParamTriplet::for_noise_level(preset).expect("scheduled preset");
        Self {
            input: args.input.clone(),
            output: args.output.clone(),
            params: apply_overrides(base, &args.params),
            seed: Seed(args.seed),
            options: DenoiseOptions {
                oversample: args.oversample,
            },
            max_side: args.max_side,
            grayscale: args.grayscale,
        }
    }
}

fn apply_overrides(base: ParamTriplet, o: &ChannelOverrides) -> ParamTriplet {
    ParamTriplet::new(
        o.y.unwrap_or(base.y),
        o.cb.unwrap_or(base.cb),
        o.cr.unwrap_or(base.cr),
    )
}

fn check_side(side: usize, max_side: usize, path: &Path) -> CliResult<()> {
    if side > max_side {
        return Err(CliError::Usage(format!(
            "{} has side {side}, above the limit of {max_side}; the denoiser stores several \
             {n}x{n} matrices (about {gib:.1} GiB each), so pass --max-side {side} only if \
             that fits in memory",
            path.display(),
            n = side * side,
            gib = (side * side) as f64 * (side * side) as f64 * 8.0 / (1u64 << 30) as f64,
        )));
    }
    Ok(())
}

fn print_timings(out: &mut dyn Write, t: &StageTimings) -> std::io::Result<()> {
    for (name, d) in [
        ("graph", t.graph),
        ("geodesics", t.geodesics),
        ("gramian", t.gramian),
        ("rsvd", t.rsvd),
        ("projection", t.projection),
        ("merge", t.merge),
        ("total", t.total()),
    ] {
        writeln!(out, "{name:<11}{:>9.3} s", d.as_secs_f64())?;
    }
    Ok(())
}

pub fn denoise(config: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let picture = read_picture(&config.input)?;
    check_side(picture.side(), config.max_side, &config.input)?;
    let gray = config.grayscale || picture.is_gray();
    if gray {
        config.params.y.validate(picture.side())?;
    } else {
        config.params.validate(picture.side())?;
    }
    let (result, timings) = denoise_picture(
        &picture,
        &config.params,
        config.grayscale,
        config.seed,
        &config.options,
    )?;
    write_picture(&config.output, &result)?;
    print_timings(out, &timings)?;
    Ok(())
}

fn metrics(args: &MetricsArgs, out: &mut dyn Write) -> CliResult<()> {
    let test = read_picture(&args.input)?;
    let reference = args.reference.as_deref().map(read_picture).transpose()?;
    let report = picture_metrics(&test, reference.as_ref())?;
    let text = serde_json::to_string_pretty(&report.to_json()).map_err(anyhow::Error::from)?;
    match &args.output {
        Some(path) => fs::write(path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn list_pngs(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "no PNG images in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

fn bench(args: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    let config = BenchConfig {
        levels: args.zeta.clone(),
        overrides: args.params.clone(),
        seed: Seed(args.seed),
        options: DenoiseOptions {
            oversample: args.oversample,
        },
    };
    let mut images = Vec::new();
    for path in list_pngs(&args.dir)? {
        let picture = read_picture(&path)?;
        check_side(picture.side(), args.max_side, &path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        images.push((name, picture));
    }
    let rows = run_bench(&images, &config)?;
    let summary = summarize(&rows);
    let mut sink: Box<dyn Write + '_> = match &args.output {
        Some(path) => Box::new(
            fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
        ),
        None => Box::new(out),
    };
    match args.format {
        ReportFormat::Csv => write_csv(&mut sink, &rows, &summary)?,
        ReportFormat::Json => write_json(&mut sink, &rows, &summary)?,
    }
    Ok(())
}

fn fixtures(args: &FixturesArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.side < 4 {
        return Err(CliError::Usage(format!(
            "fixture side must be at least 4, got {}",
            args.side
        )));
    }
    fs::create_dir_all(&args.dir)
        .with_context(|| format!("cannot create {}", args.dir.display()))?;
    for (name, img) in fixture_set_sized(args.side, Seed(args.seed))? {
        let path = args.dir.join(format!("{name}.png"));
        write_picture(&path, &Picture::Rgb(img))?;
        writeln!(out, "{}", path.display())?;
    }
    Ok(())
}
