//! Single-channel denoising pipeline.

use std::time::{Duration, Instant};

use log::{debug, warn};
use ndarray::{Array2, Axis};

use crate::graph::{build_knn_graph, ensure_connected, geodesic_distances};
use crate::image::{extract_patches, merge_patches, Channel, PatchMatrix};
use crate::linalg::{double_center_owned, par_matmul, rsvd};
use crate::{Error, Result, Seed};

pub const DEFAULT_OVERSAMPLE: usize = 10;

/// Patch side `rho`, neighbour count `delta` and basis size `rank`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChannelParams {
    pub rho: usize,
    pub delta: usize,
    pub rank: usize,
}

impl ChannelParams {
    pub const fn new(rho: usize, delta: usize, rank: usize) -> Self {
        Self { rho, delta, rank }
    }

    /// Checks the triplet against an `side x side` channel.
    pub fn validate(&self, side: usize) -> Result<()> {
        let n = side * side;
        if self.rho < 3 || self.rho.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "patch side must be odd and at least 3, got {}",
                self.rho
            )));
        }
        if self.rho >= side {
            return Err(Error::InvalidParameter(format!(
                "patch side {} must be smaller than the image side {side}",
                self.rho
            )));
        }
        if self.delta == 0 || self.delta >= n {
            return Err(Error::InvalidParameter(format!(
                "neighbour count {} must lie in 1..{n}",
                self.delta
            )));
        }
        if self.rank == 0 || self.rank > n {
            return Err(Error::InvalidParameter(format!(
                "rank {} must lie in 1..={n}",
                self.rank
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for ChannelParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.rho, self.delta, self.rank)
    }
}

/// Leading right singular vectors of the geodesic Gramian, one per column.
#[derive(Clone, Debug, PartialEq)]
pub struct GramianBasis {
    vectors: Array2<f64>,
}

impl GramianBasis {
    /// Rejects bases whose columns are not orthonormal within `1e-8`.
    pub fn new(vectors: Array2<f64>) -> Result<Self> {
        let gram = vectors.t().dot(&vectors);
        for ((i, j), v) in gram.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            if (v - want).abs() > 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "basis columns {i} and {j} have inner product {v}"
                )));
            }
        }
        Ok(Self { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    pub fn dimension(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }
}

/// `V V^T U`: every patch-coordinate column of the patch matrix is projected
/// onto the span of the basis.
pub fn project_patches(patches: &PatchMatrix, basis: &GramianBasis) -> Result<PatchMatrix> {
    if basis.dimension() != patches.len() {
        return Err(Error::InvalidArgument(format!(
            "basis vectors have length {} but there are {} patches",
            basis.dimension(),
            patches.len()
        )));
    }
    let v = basis.vectors.view();
    let coeffs = v.t().dot(&patches.rows());
    let projected = par_matmul(v, coeffs.view());
    PatchMatrix::from_array(patches.side(), patches.rho(), projected)
}

/// Tuning knobs that are not part of the per-channel parameter triplet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenoiseOptions {
    pub oversample: usize,
}

impl Default for DenoiseOptions {
    fn default() -> Self {
        Self {
            oversample: DEFAULT_OVERSAMPLE,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub graph: Duration,
    pub geodesics: Duration,
    pub gramian: Duration,
    pub rsvd: Duration,
    pub projection: Duration,
    pub merge: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.graph + self.geodesics + self.gramian + self.rsvd + self.projection + self.merge
    }

    pub fn accumulate(&mut self, other: &StageTimings) {
        self.graph += other.graph;
        self.geodesics += other.geodesics;
        self.gramian += other.gramian;
        self.rsvd += other.rsvd;
        self.projection += other.projection;
        self.merge += other.merge;
    }
}

#[derive(Clone, Debug)]
pub struct DenoiseReport {
    pub channel: Channel,
    pub timings: StageTimings,
    /// Basis vectors actually used; below the requested rank when the
    /// Gramian has lower numerical rank.
    pub basis_size: usize,
    pub bridges_added: usize,
}

pub fn denoise_channel(noisy: &Channel, params: &ChannelParams, seed: Seed) -> Result<Channel> {
    denoise_channel_with(noisy, params, seed, &DenoiseOptions::default()).map(|r| r.channel)
}

/// Full pipeline: patches, kNN graph, geodesics, Gramian, randomized SVD,
/// projection and Shepard merge.
///
/// The projection acts on the patch matrix with its column means removed.
/// The Gramian annihilates the constant vector, so its singular vectors
/// cannot carry the mean intensity; the means are added back afterwards.
pub fn denoise_channel_with(
    noisy: &Channel,
    params: &ChannelParams,
    seed: Seed,
    options: &DenoiseOptions,
) -> Result<DenoiseReport> {
    params.validate(noisy.side())?;
    let mut timings = StageTimings::default();

    let clock = Instant::now();
    let patches = extract_patches(noisy, params.rho)?;
    let knn = build_knn_graph(&patches, params.delta)?;
    let connected = ensure_connected(&knn, &patches)?;
    if connected.added_edges > 0 {
        warn!(
            "patch graph was disconnected; added {} bridging edges",
            connected.added_edges
        );
    }
    timings.graph = clock.elapsed();

    let clock = Instant::now();
    let geodesics = geodesic_distances(&connected.graph)?;
    let bridges_added = connected.added_edges;
    drop(connected);
    timings.geodesics = clock.elapsed();

    let clock = Instant::now();
    let gramian = double_center_owned(geodesics.into_array())?;
    timings.gramian = clock.elapsed();

    let clock = Instant::now();
    let triplets = rsvd(gramian.view(), params.rank, options.oversample, seed)?;
    drop(gramian);
    if triplets.count() < params.rank {
        warn!(
            "requested {} singular vectors but the Gramian has numerical rank {}; using all available",
            params.rank,
            triplets.count()
        );
    }
    let basis = GramianBasis {
        vectors: triplets.right,
    };
    timings.rsvd = clock.elapsed();

    let clock = Instant::now();
    let side = patches.side();
    let rho = patches.rho();
    let mut centred = patches.into_array();
    let means = centred.mean_axis(Axis(0)).expect("at least one patch");
    centred -= &means;
    let centred = PatchMatrix::from_array(side, rho, centred)?;
    let mut projected = project_patches(&centred, &basis)?.into_array();
    projected += &means;
    let projected = PatchMatrix::from_array(side, rho, projected)?;
    timings.projection = clock.elapsed();

    let clock = Instant::now();
    let channel = merge_patches(&projected)?;
    timings.merge = clock.elapsed();

    debug!("denoised {side}x{side} channel with {params}: {timings:?}");
    Ok(DenoiseReport {
        channel,
        timings,
        basis_size: basis.len(),
        bridges_added,
    })
}
