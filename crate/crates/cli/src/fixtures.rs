//! Deterministic synthetic test scenes.
//!
//! All scenes are low-contrast, in the style of remote sensing tiles: a few
//! tens of intensity levels of structure around a mid-range background.

use eggd_core::color::RgbImage;
use eggd_core::image::Channel;
use eggd_core::{Result, Seed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURE_SIDE: usize = 64;
pub const FIXTURE_NAMES: [&str; 4] = ["blocks", "gradient", "checkerboard", "texture"];

/// Base colour of every scene.
const BASE: [f64; 3] = [196.0, 204.0, 184.0];

fn rgb_from_fn(side: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<RgbImage> {
    let plane = |ch| Channel::from_fn(side, |r, c| f(ch, r, c).clamp(0.0, 255.0));
    RgbImage::new(plane(0)?, plane(1)?, plane(2)?)
}

/// 4x4 grid of flat blocks with random offsets from the base colour.
pub fn blocks(side: usize, seed: Seed) -> Result<RgbImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let offsets: Vec<[f64; 3]> = (0..16)
        .map(|_| [(); 3].map(|_| rng.random_range(-7.0..7.0)))
        .collect();
    let cell = side.div_ceil(4);
    rgb_from_fn(side, |ch, r, c| {
        BASE[ch] + offsets[(r / cell) * 4 + c / cell][ch]
    })
}

/// Diagonal ramp whose direction differs per channel.
pub fn gradient(side: usize, seed: Seed) -> Result<RgbImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let angles = [(); 3].map(|_| rng.random_range(0.0..std::f64::consts::TAU));
    let span = (side - 1) as f64;
    rgb_from_fn(side, |ch, r, c| {
        let (y, x) = (r as f64 / span - 0.5, c as f64 / span - 0.5);
        let t = x * angles[ch].cos() + y * angles[ch].sin();
        BASE[ch] + 18.0 * t
    })
}

/// Two colours alternating on 8-pixel squares.
pub fn checkerboard(side: usize, seed: Seed) -> Result<RgbImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let delta = [(); 3].map(|_| rng.random_range(4.0..7.0));
    rgb_from_fn(side, |ch, r, c| {
        let sign = if (r / 8 + c / 8) % 2 == 0 { 1.0 } else { -1.0 };
        BASE[ch] + sign * delta[ch]
    })
}

/// Sum of three random low-frequency plane waves per channel.
pub fn texture(side: usize, seed: Seed) -> Result<RgbImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let waves: Vec<[(f64, f64, f64); 3]> = (0..3)
        .map(|_| {
            [(); 3].map(|_| {
                (
                    rng.random_range(1.0..4.0),
                    rng.random_range(0.0..std::f64::consts::TAU),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
        })
        .collect();
    let span = side as f64;
    rgb_from_fn(side, |ch, r, c| {
        let (y, x) = (r as f64 / span, c as f64 / span);
        let sum: f64 = waves[ch]
            .iter()
            .map(|&(freq, angle, phase)| {
                let k = std::f64::consts::TAU * freq;
                (k * (x * angle.cos() + y * angle.sin()) + phase).sin()
            })
            .sum();
        BASE[ch] + 4.0 * sum
    })
}

/// The named scene, or `None` for an unknown name.
pub fn fixture(name: &str, side: usize, seed: Seed) -> Option<Result<RgbImage>> {
    Some(match name {
        "blocks" => blocks(side, seed),
        "gradient" => gradient(side, seed),
        "checkerboard" => checkerboard(side, seed),
        "texture" => texture(side, seed),
        _ => return None,
    })
}

/// Every scene at [`FIXTURE_SIDE`], each from its own offset of `seed`.
pub fn fixture_set(seed: Seed) -> Result<Vec<(&'static str, RgbImage)>> {
    fixture_set_sized(FIXTURE_SIDE, seed)
}

pub fn fixture_set_sized(side: usize, seed: Seed) -> Result<Vec<(&'static str, RgbImage)>> {
    FIXTURE_NAMES
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let img = fixture(name, side, seed.offset(i as u64)).expect("known name")?;
            Ok((name, img))
        })
        .collect()
}
