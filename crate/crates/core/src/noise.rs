//! Additive Gaussian noise at a fixed standard deviation or at a target
//! relative noise level.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::image::Planar;
use crate::{Error, Result, Seed};

/// Relative tolerance for hitting a target noise level.
pub const ZETA_TOLERANCE: f64 = 0.01;
pub const MAX_PROBES: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseLevel {
    /// Standard deviation on the `[0, 255]` scale.
    Sigma(f64),
    /// Relative noise `100 |noisy - clean| / |clean|`, in percent.
    Zeta(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub level: NoiseLevel,
    pub seed: Seed,
}

impl NoiseSpec {
    pub fn sigma(sigma: f64, seed: Seed) -> Self {
        Self {
            level: NoiseLevel::Sigma(sigma),
            seed,
        }
    }

    pub fn zeta(percent: f64, seed: Seed) -> Self {
        Self {
            level: NoiseLevel::Zeta(percent),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.level {
            NoiseLevel::Sigma(s) if !(s.is_finite() && s > 0.0) => Err(Error::InvalidParameter(
                format!("noise standard deviation must be positive, got {s}"),
            )),
            NoiseLevel::Zeta(z) if !(z > 0.0 && z < 100.0) => Err(Error::InvalidParameter(
                format!("relative noise must lie strictly between 0 and 100 percent, got {z}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Noisy<I> {
    pub image: I,
    /// Standard deviation that produced `image`.
    pub sigma: f64,
    /// Measured relative noise after clamping, in percent.
    pub zeta: f64,
    pub probes: usize,
}

/// `100 |noisy - clean|_F / |clean|_F` over every value of every channel.
pub fn measure_zeta<I: Planar>(clean: &I, noisy: &I) -> Result<f64> {
    let (a, b) = (clean.planes(), noisy.planes());
    if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| x.len() != y.len()) {
        return Err(Error::InvalidArgument(
            "clean and noisy images differ in shape".into(),
        ));
    }
    let (mut diff, mut base) = (0.0, 0.0);
    for (x, y) in a.iter().zip(&b) {
        for (c, n) in x.iter().zip(y.iter()) {
            diff += (n - c) * (n - c);
            base += c * c;
        }
    }
    if base == 0.0 {
        return Err(Error::DivisionByZero("clean image is all zeros".into()));
    }
    Ok((diff / base).sqrt() * 100.0)
}

/// Adds `N(0, sigma^2)` samples channel by channel in row-major order and
/// clamps into `[0, 255]`.
pub fn add_noise_with_sigma<I: Planar>(img: &I, sigma: f64, seed: Seed) -> I {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    img.map_values(|_, _, v| {
        let z: f64 = StandardNormal.sample(&mut rng);
        v + sigma * z
    })
}

/// Adds Gaussian noise according to `spec`.
///
/// In target mode the standard deviation is found by bracketing and
/// bisection on the measured post-clamp noise level. Every probe draws
/// fresh noise from its own sub-seed; the search stops once the level is
/// within [`ZETA_TOLERANCE`] of the target and fails after [`MAX_PROBES`].
pub fn add_gaussian_noise<I: Planar>(img: &I, spec: &NoiseSpec) -> Result<Noisy<I>> {
    spec.validate()?;
    let target = match spec.level {
        NoiseLevel::Sigma(sigma) => {
            let image = add_noise_with_sigma(img, sigma, spec.seed);
            let zeta = measure_zeta(img, &image)?;
            return Ok(Noisy {
                image,
                sigma,
                zeta,
                probes: 1,
            });
        }
        NoiseLevel::Zeta(z) => z,
    };

    let (sum_sq, count) = img
        .planes()
        .iter()
        .flat_map(|p| p.iter())
        .fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    if sum_sq == 0.0 {
        return Err(Error::DivisionByZero("clean image is all zeros".into()));
    }
    let rms = (sum_sq / count as f64).sqrt();

    let mut seeds = ChaCha8Rng::seed_from_u64(spec.seed.0);
    let mut probes = 0;
    let mut last = 0.0;
    let mut probe = |sigma: f64| -> Result<Noisy<I>> {
        probes += 1;
        let image = add_noise_with_sigma(img, sigma, Seed(seeds.next_u64()));
        let zeta = measure_zeta(img, &image)?;
        last = zeta;
        Ok(Noisy {
            image,
            sigma,
            zeta,
            probes,
        })
    };
    let close = |z: f64| (z - target).abs() <= ZETA_TOLERANCE * target;

    // Without clamping E[zeta] is about 100 sigma / rms.
    let (mut lo, mut hi) = (0.0, target / 100.0 * rms);
    loop {
        let attempt = probe(hi)?;
        if close(attempt.zeta) {
            return Ok(attempt);
        }
        if attempt.zeta > target {
            break;
        }
        if attempt.probes >= MAX_PROBES {
            return Err(Error::NoConvergence {
                target,
                achieved: attempt.zeta,
                iterations: attempt.probes,
            });
        }
        lo = hi;
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let attempt = probe(mid)?;
        if close(attempt.zeta) {
            return Ok(attempt);
        }
        if attempt.probes >= MAX_PROBES {
            return Err(Error::NoConvergence {
                target,
                achieved: attempt.zeta,
                iterations: attempt.probes,
            });
        }
        if attempt.zeta < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
