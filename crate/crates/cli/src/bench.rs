//! Benchmark harness: for every image and noise level, inject noise,
//! denoise, and score both the noisy and the denoised image against the
//! clean one.

use std::io::Write;
use std::time::Instant;

use eggd_core::color::ParamTriplet;
use eggd_core::denoise::DenoiseOptions;
use eggd_core::metrics::{number_or_inf, psnr, shannon_entropy, ssim};
use eggd_core::noise::NoiseSpec;
use eggd_core::Seed;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::ChannelOverrides;
use crate::io::Picture;
use crate::{denoise_picture, noisy_picture, CliError, CliResult};

pub const METHOD_NOISY: &str = "noisy";
pub const METHOD_EGGD: &str = "eggd";

/// One report row. Per-image rows carry the image name; summary rows use
/// `mean` or `sd` in its place.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub image: String,
    pub zeta: f64,
    pub method: String,
    pub she: f64,
    pub psnr: f64,
    pub ssim: f64,
    pub seconds: f64,
}

impl BenchResult {
    fn to_json(&self) -> Value {
        json!({
            "image": self.image,
            "zeta": self.zeta,
            "method": self.method,
            "she": self.she,
            "psnr": number_or_inf(self.psnr),
            "ssim": self.ssim,
            "seconds": self.seconds,
        })
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub levels: Vec<f64>,
    pub overrides: ChannelOverrides,
    pub seed: Seed,
    pub options: DenoiseOptions,
}

impl BenchConfig {
    /// The published schedule for `zeta`, with any overrides applied.
    pub fn params_for(&self, zeta: f64) -> CliResult<ParamTriplet> {
        let scheduled = if zeta.fract() == 0.0 {
            ParamTriplet::for_noise_level(zeta as u32)
        } else {
            None
        };
        let o = &self.overrides;
        match (scheduled, o.y, o.cb, o.cr) {
            (_, Some(y), Some(cb), Some(cr)) => Ok(ParamTriplet::new(y, cb, cr)),
            (Some(s), y, cb, cr) => Ok(ParamTriplet::new(
                y.unwrap_or(s.y),
                cb.unwrap_or(s.cb),
                cr.unwrap_or(s.cr),
            )),
            (None, ..) => Err(CliError::Usage(format!(
                "no published parameters for a noise level of {zeta}%; pass --y, --cb and --cr"
            ))),
        }
    }

    /// Noise and denoising seeds for image `image` at level index `level`.
    pub fn seeds(&self, image: usize, level: usize) -> (Seed, Seed) {
        let k = (image * self.levels.len() + level) as u64;
        (self.seed.offset(2 * k), self.seed.offset(2 * k + 1))
    }
}

fn score(
    name: &str,
    zeta: f64,
    method: &str,
    clean: &Picture,
    test: &Picture,
    seconds: f64,
) -> CliResult<BenchResult> {
    let (she, psnr, ssim) = match (clean, test) {
        (Picture::Gray(c), Picture::Gray(t)) => (shannon_entropy(t)?, psnr(c, t)?, ssim(c, t)?),
        (Picture::Rgb(c), Picture::Rgb(t)) => (shannon_entropy(t)?, psnr(c, t)?, ssim(c, t)?),
        _ => unreachable!("denoising keeps the channel count"),
    };
    Ok(BenchResult {
        image: name.to_string(),
        zeta,
        method: method.to_string(),
        she,
        psnr,
        ssim,
        seconds,
    })
}

/// Two rows (noisy, denoised) per image and level, in input order.
pub fn run_bench(
    images: &[(String, Picture)],
    config: &BenchConfig,
) -> CliResult<Vec<BenchResult>> {
    if images.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!("no images to benchmark")));
    }
    let params: Vec<ParamTriplet> = config
        .levels
        .iter()
        .map(|&z| config.params_for(z))
        .collect::<CliResult<_>>()?;
    for (name, picture) in images {
        for p in &params {
            p.validate(picture.side())
                .map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        }
    }

    let mut rows = Vec::new();
    for (i, (name, clean)) in images.iter().enumerate() {
        for (j, (&zeta, p)) in config.levels.iter().zip(&params).enumerate() {
            let (noise_seed, denoise_seed) = config.seeds(i, j);
            let clock = Instant::now();
            let (noisy, _, _) = noisy_picture(clean, &NoiseSpec::zeta(zeta, noise_seed))?;
            let noise_time = clock.elapsed().as_secs_f64();

            let clock = Instant::now();
            let (denoised, _) = denoise_picture(&noisy, p, false, denoise_seed, &config.options)?;
            let denoise_time = clock.elapsed().as_secs_f64();

            log::info!("{name} at {zeta}%: done in {denoise_time:.1} s");
            rows.push(score(name, zeta, METHOD_NOISY, clean, &noisy, noise_time)?);
            rows.push(score(
                name,
                zeta,
                METHOD_EGGD,
                clean,
                &denoised,
                denoise_time,
            )?);
        }
    }
    Ok(rows)
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if !mean.is_finite() {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and population standard deviation over images, per level and
/// method, in level order.
pub fn summarize(rows: &[BenchResult]) -> Vec<BenchResult> {
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(z, m)| *z == r.zeta && *m == r.method) {
            keys.push((r.zeta, r.method.clone()));
        }
    }
    let mut out = Vec::new();
    for (zeta, method) in keys {
        let group: Vec<&BenchResult> = rows
            .iter()
            .filter(|r| r.zeta == zeta && r.method == method)
            .collect();
        let stat =
            |f: fn(&BenchResult) -> f64| mean_sd(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
        let (she, psnr, ssim, secs) = (
            stat(|r| r.she),
            stat(|r| r.psnr),
            stat(|r| r.ssim),
            stat(|r| r.seconds),
        );
        for (label, pick) in [("mean", 0), ("sd", 1)] {
            let get = |s: (f64, f64)| if pick == 0 { s.0 } else { s.1 };
            out.push(BenchResult {
                image: label.to_string(),
                zeta,
                method: method.clone(),
                she: get(she),
                psnr: get(psnr),
                ssim: get(ssim),
                seconds: get(secs),
            });
        }
    }
    out
}

/// Header `image,zeta,method,she,psnr,ssim,seconds`, then the per-image
/// rows, then the summary rows.
pub fn write_csv(
    out: impl Write,
    rows: &[BenchResult],
    summary: &[BenchResult],
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows.iter().chain(summary) {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(
    mut out: impl Write,
    rows: &[BenchResult],
    summary: &[BenchResult],
) -> anyhow::Result<()> {
    let doc = json!({
        "rows": rows.iter().map(BenchResult::to_json).collect::<Vec<_>>(),
        "summary": summary.iter().map(BenchResult::to_json).collect::<Vec<_>>(),
    });
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(image: &str, zeta: f64, method: &str, psnr: f64) -> BenchResult {
        BenchResult {
            image: image.into(),
            zeta,
            method: method.into(),
            she: 1.0,
            psnr,
            ssim: 0.5,
            seconds: 2.0,
        }
    }

    fn config(overrides: ChannelOverrides) -> BenchConfig {
        BenchConfig {
            levels: vec![2.0, 4.0],
            overrides,
            seed: Seed(10),
            options: DenoiseOptions::default(),
        }
    }

    #[test]
    fn summary_statistics() {
        let rows = [
            row("a", 2.0, "eggd", 30.0),
            row("b", 2.0, "eggd", 34.0),
            row("a", 2.0, "noisy", 20.0),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 4);
        assert_eq!((s[0].image.as_str(), s[0].psnr), ("mean", 32.0));
        assert_eq!((s[1].image.as_str(), s[1].psnr), ("sd", 2.0));
        assert_eq!(
            (s[2].method.as_str(), s[2].psnr, s[3].psnr),
            ("noisy", 20.0, 0.0)
        );
    }

    #[test]
    fn csv_layout() {
        let rows = [row("a", 2.0, "eggd", f64::INFINITY)];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("image,zeta,method,she,psnr,ssim,seconds")
        );
        assert_eq!(lines.next(), Some("a,2.0,eggd,1.0,inf,0.5,2.0"));
    }

    #[test]
    fn schedule_and_overrides() {
        let plain = config(ChannelOverrides::default());
        assert_eq!(
            plain.params_for(4.0).unwrap(),
            ParamTriplet::for_noise_level(4).unwrap()
        );
        assert!(matches!(plain.params_for(3.0), Err(CliError::Usage(_))));

        let y = eggd_core::denoise::ChannelParams::new(3, 5, 6);
        let one = config(ChannelOverrides {
            y: Some(y),
            ..Default::default()
        });
        let p = one.params_for(2.0).unwrap();
        assert_eq!(
            (p.y, p.cb),
            (y, ParamTriplet::for_noise_level(2).unwrap().cb)
        );

        let all = config(ChannelOverrides {
            y: Some(y),
            cb: Some(y),
            cr: Some(y),
        });
        assert_eq!(all.params_for(3.5).unwrap(), ParamTriplet::new(y, y, y));
    }

    #[test]
    fn seeds_are_distinct() {
        let c = config(ChannelOverrides::default());
        let mut all = Vec::new();
        for i in 0..3 {
            for j in 0..2 {
                let (a, b) = c.seeds(i, j);
                all.extend([a, b]);
            }
        }
        let mut dedup = all.clone();
        dedup.sort_by_key(|s| s.0);
        dedup.dedup();
        assert_eq!(dedup.len(), all.len());
    }
}
