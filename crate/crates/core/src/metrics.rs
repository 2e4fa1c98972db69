//! Image quality metrics: Shannon entropy, RMSE, PSNR and global SSIM.
//!
//! Multi-channel images are pooled as follows: entropy uses one histogram
//! over every channel value, RMSE/PSNR pool squared errors over all
//! channels, and SSIM averages the per-channel scores.

use serde_json::{json, Map, Value};

use crate::image::{Planar, MAX_INTENSITY};
use crate::{Error, Result};

pub const SSIM_C1: f64 = (0.01 * MAX_INTENSITY) * (0.01 * MAX_INTENSITY);
pub const SSIM_C2: f64 = (0.03 * MAX_INTENSITY) * (0.03 * MAX_INTENSITY);
pub const SSIM_C3: f64 = SSIM_C2 / 2.0;

/// 8-bit bin of an intensity, rounding halves up.
pub fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, MAX_INTENSITY) as u8
}

/// Entropy in bits of the 256-bin intensity histogram.
pub fn shannon_entropy<I: Planar>(img: &I) -> Result<f64> {
    let mut hist = [0u64; 256];
    let mut total = 0u64;
    for plane in img.planes() {
        for &v in plane {
            hist[quantize(v) as usize] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::InvalidInput("entropy of an empty image".into()));
    }
    let total = total as f64;
    Ok(hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0))
}

fn check_shapes<I: Planar>(reference: &I, test: &I) -> Result<()> {
    let (a, b) = (reference.planes(), test.planes());
    if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| x.len() != y.len()) {
        return Err(Error::InvalidArgument(
            "reference and test images differ in shape".into(),
        ));
    }
    Ok(())
}

/// Root mean squared difference over every value of every channel.
pub fn rmse<I: Planar>(reference: &I, test: &I) -> Result<f64> {
    check_shapes(reference, test)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in reference.planes().into_iter().zip(test.planes()) {
        for (x, y) in a.iter().zip(b) {
            let d = x - y;
            sum += d * d;
        }
        count += a.len();
    }
    Ok((sum / count as f64).sqrt())
}

/// `20 log10(255 / rmse)`, or `+inf` for identical images.
pub fn psnr_from_rmse(rmse: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (MAX_INTENSITY / rmse).log10()
    }
}

pub fn psnr<I: Planar>(reference: &I, test: &I) -> Result<f64> {
    rmse(reference, test).map(psnr_from_rmse)
}

/// Global SSIM of one plane: luminance, contrast and correlation terms
/// over whole-image statistics with population moments.
pub fn ssim_plane(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        vx += da * da;
        vy += db * db;
        cov += da * db;
    }
    vx /= n;
    vy /= n;
    cov /= n;
    let (sx, sy) = (vx.sqrt(), vy.sqrt());
    let luminance = (2.0 * mx * my + SSIM_C1) / (mx * mx + my * my + SSIM_C1);
    let contrast = (2.0 * sx * sy + SSIM_C2) / (vx + vy + SSIM_C2);
    let structure = (cov + SSIM_C3) / (sx * sy + SSIM_C3);
    luminance * contrast * structure
}

/// Mean of the per-channel global SSIM values.
pub fn ssim<I: Planar>(reference: &I, test: &I) -> Result<f64> {
    check_shapes(reference, test)?;
    let planes = reference.planes();
    if planes.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidInput("SSIM of an empty image".into()));
    }
    let total: f64 = planes
        .iter()
        .zip(test.planes())
        .map(|(a, b)| ssim_plane(a, b))
        .sum();
    Ok(total / planes.len() as f64)
}

/// Entropy of an image plus, when a reference is given, its RMSE, PSNR and
/// SSIM against that reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub she: f64,
    pub rmse: Option<f64>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
}

impl MetricsReport {
    pub fn compute<I: Planar>(test: &I, reference: Option<&I>) -> Result<Self> {
        let she = shannon_entropy(test)?;
        let Some(reference) = reference else {
            return Ok(Self {
                she,
                rmse: None,
                psnr: None,
                ssim: None,
            });
        };
        let rmse = rmse(reference, test)?;
        Ok(Self {
            she,
            rmse: Some(rmse),
            psnr: Some(psnr_from_rmse(rmse)),
            ssim: Some(ssim(reference, test)?),
        })
    }

    /// Flat key-value document; an infinite PSNR is written as `"inf"`.
    pub fn to_json(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("she".into(), json!(self.she));
        if let Some(v) = self.rmse {
            doc.insert("rmse".into(), json!(v));
        }
        if let Some(v) = self.psnr {
            doc.insert("psnr".into(), number_or_inf(v));
        }
        if let Some(v) = self.ssim {
            doc.insert("ssim".into(), json!(v));
        }
        Value::Object(doc)
    }
}

pub fn number_or_inf(v: f64) -> Value {
    if v == f64::INFINITY {
        Value::String("inf".into())
    } else {
        json!(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::RgbImage;
    use crate::image::Channel;

    fn levels(values: &[f64]) -> Channel {
        let side = (values.len() as f64).sqrt() as usize;
        Channel::new(side, values.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&Channel::filled(5, 9.0)).unwrap(), 0.0);
        let uniform: Vec<f64> = (0..256).map(f64::from).collect();
        assert_eq!(shannon_entropy(&levels(&uniform)).unwrap(), 8.0);
        let quarter = levels(&[10.0, 10.0, 10.0, 200.0]);
        let want = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((shannon_entropy(&quarter).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.8113).abs() < 1e-4);
    }

    #[test]
    fn entropy_rounds_half_up() {
        assert_eq!(quantize(0.5), 1);
        assert_eq!(quantize(0.49), 0);
        assert_eq!(quantize(254.5), 255);
        let split = levels(&[1.5, 2.0, 2.4999, 1.49]);
        // Bins: 2, 2, 2, 1.
        let want = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((shannon_entropy(&split).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn rmse_examples() {
        let a = Channel::from_fn(4, |r, c| (r * 4 + c) as f64).unwrap();
        let b = Channel::from_fn(4, |r, c| (r * 4 + c) as f64 + 1.0).unwrap();
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(rmse(&a, &b).unwrap(), 1.0);
        assert!(rmse(&a, &Channel::filled(3, 0.0)).is_err());
    }

    #[test]
    fn psnr_examples() {
        let a = Channel::filled(3, 40.0);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(psnr_from_rmse(255.0), 0.0);
        assert!((psnr_from_rmse(2.55) - 40.0).abs() < 1e-9);
    }

    #[test]
    fn psnr_pools_rgb_channels() {
        let a = RgbImage::filled(2, [10.0, 20.0, 30.0]);
        let b = RgbImage::filled(2, [13.0, 20.0, 30.0]);
        // Pooled mean squared error is 9 / 3.
        assert!((rmse(&a, &b).unwrap() - 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ssim_identity_and_inversion() {
        let a = Channel::from_fn(8, |r, c| if (r + c) % 2 == 0 { 60.0 } else { 195.0 }).unwrap();
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let inv = a.map_values(|_, _, v| 255.0 - v);
        assert!(ssim(&a, &inv).unwrap() < 0.0);
    }

    #[test]
    fn report_without_reference_has_only_entropy() {
        let r = MetricsReport::compute(&Channel::filled(3, 1.0), None).unwrap();
        let doc = r.to_json();
        assert_eq!(doc.as_object().unwrap().len(), 1);
        assert_eq!(doc["she"], json!(0.0));
    }

    #[test]
    fn report_writes_inf() {
        let a = Channel::filled(3, 1.0);
        let doc = MetricsReport::compute(&a, Some(&a)).unwrap().to_json();
        assert_eq!(doc["psnr"], json!("inf"));
        assert_eq!(doc["rmse"], json!(0.0));
    }
}
