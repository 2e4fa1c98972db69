//! Square single-channel images, patch extraction and Shepard merging.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::{Error, Result};

pub const MAX_INTENSITY: f64 = 255.0;

/// An `n x n` grid of intensities on the `[0, 255]` scale, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    side: usize,
    data: Vec<f64>,
}

impl Channel {
    pub fn new(side: usize, data: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidInput("image side must be positive".into()));
        }
        if data.len() != side * side {
            return Err(Error::InvalidInput(format!(
                "expected {} intensities for a {side}x{side} channel, got {}",
                side * side,
                data.len()
            )));
        }
        if let Some(bad) = data
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0 || *v > MAX_INTENSITY)
        {
            return Err(Error::InvalidInput(format!(
                "intensity {} at index {bad} is outside [0, 255]",
                data[bad]
            )));
        }
        Ok(Self { side, data })
    }

    /// Builds a channel from arbitrary reals, clamping into `[0, 255]`.
    /// Non-finite values are rejected.
    pub fn from_clamped(side: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite intensity".into()));
        }
        data.iter_mut()
            .for_each(|v| *v = v.clamp(0.0, MAX_INTENSITY));
        Self::new(side, data)
    }

    pub fn filled(side: usize, value: f64) -> Self {
        Self::new(side, vec![value; side * side]).expect("constant channel in range")
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                data.push(f(r, c));
            }
        }
        Self::new(side, data)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.side + col]
    }

    /// Horizontal mirror image (columns reversed).
    pub fn mirrored(&self) -> Self {
        let n = self.side;
        let data = (0..n * n)
            .map(|k| self.data[(k / n) * n + (n - 1 - k % n)])
            .collect();
        Self { side: n, data }
    }
}

/// Shared view over images made of one or more equally sized channel planes.
pub trait Planar: Clone {
    fn side(&self) -> usize;
    fn planes(&self) -> Vec<&[f64]>;
    /// Replaces every plane value, clamping into `[0, 255]`.
    fn map_values(&self, f: impl FnMut(usize, usize, f64) -> f64) -> Self;

    fn value_count(&self) -> usize {
        self.planes().iter().map(|p| p.len()).sum()
    }
}

impl Planar for Channel {
    fn side(&self) -> usize {
        self.side
    }

    fn planes(&self) -> Vec<&[f64]> {
        vec![&self.data]
    }

    fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| f(0, i, v).clamp(0.0, MAX_INTENSITY))
            .collect();
        Self {
            side: self.side,
            data,
        }
    }
}

/// Zero-based pixel coordinate. Linear index is `row * n + col`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn from_index(k: usize, side: usize) -> Self {
        Self {
            row: k / side,
            col: k % side,
        }
    }

    pub fn index(self, side: usize) -> usize {
        self.row * side + self.col
    }

    fn squared_distance(self, other: Pixel) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        dr * dr + dc * dc
    }
}

fn check_patch_side(rho: usize, side: usize) -> Result<()> {
    if rho < 3 || rho.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "patch side must be odd and at least 3, got {rho}"
        )));
    }
    if rho >= side {
        return Err(Error::InvalidParameter(format!(
            "patch side {rho} must be smaller than the image side {side}"
        )));
    }
    Ok(())
}

/// `n^2` vectorized `rho x rho` patches, one row per pixel in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchMatrix {
    side: usize,
    rho: usize,
    rows: Array2<f64>,
}

impl PatchMatrix {
    pub fn from_array(side: usize, rho: usize, rows: Array2<f64>) -> Result<Self> {
        if rho.is_multiple_of(2) || rho == 0 {
            return Err(Error::InvalidParameter(format!(
                "patch side must be odd, got {rho}"
            )));
        }
        if rows.dim() != (side * side, rho * rho) {
            return Err(Error::InvalidArgument(format!(
                "patch matrix must be {}x{}, got {:?}",
                side * side,
                rho * rho,
                rows.dim()
            )));
        }
        Ok(Self { side, rho, rows })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn rows(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }

    pub fn rows_mut(&mut self) -> ndarray::ArrayViewMut2<'_, f64> {
        self.rows.view_mut()
    }

    pub fn into_array(self) -> Array2<f64> {
        self.rows
    }
}

/// Mirror an out-of-range coordinate back into `0..n` without repeating the
/// edge sample (`-1 -> 1`, `n -> n - 2`).
fn reflect(pos: isize, n: usize) -> usize {
    let n = n as isize;
    let mut p = pos;
    if p < 0 {
        p = -p;
    }
    if p >= n {
        p = 2 * (n - 1) - p;
    }
    debug_assert!((0..n).contains(&p));
    p as usize
}

/// Cuts a patch centred at every pixel. Out-of-image samples come from
/// reflective padding.
pub fn extract_patches(channel: &Channel, rho: usize) -> Result<PatchMatrix> {
    let n = channel.side();
    check_patch_side(rho, n)?;
    let half = (rho / 2) as isize;
    let data = channel.data();

    let mut rows = Array2::<f64>::zeros((n * n, rho * rho));
    rows.axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(k, mut row)| {
            let (ci, cj) = ((k / n) as isize, (k % n) as isize);
            let mut slot = 0;
            for di in -half..=half {
                let r = reflect(ci + di, n);
                for dj in -half..=half {
                    let c = reflect(cj + dj, n);
                    row[slot] = data[r * n + c];
                    slot += 1;
                }
            }
        });
    Ok(PatchMatrix { side: n, rho, rows })
}

/// Pixels within Chebyshev distance `rho / 2` of a centre, clipped to the image.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelNeighborhood {
    center: Pixel,
    members: Vec<Pixel>,
}

impl PixelNeighborhood {
    /// `rho` must be odd; `rho == 1` gives the single-pixel neighbourhood.
    pub fn new(center: Pixel, rho: usize, side: usize) -> Result<Self> {
        if rho.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "neighbourhood side must be odd, got {rho}"
            )));
        }
        if center.row >= side || center.col >= side {
            return Err(Error::InvalidArgument(format!(
                "pixel {center:?} lies outside a {side}x{side} image"
            )));
        }
        let half = rho / 2;
        let rows = center.row.saturating_sub(half)..=(center.row + half).min(side - 1);
        let members = rows
            .flat_map(|r| {
                let cols = center.col.saturating_sub(half)..=(center.col + half).min(side - 1);
                cols.map(move |c| Pixel::new(r, c))
            })
            .collect();
        Ok(Self { center, members })
    }

    pub fn center(&self) -> Pixel {
        self.center
    }

    pub fn members(&self) -> &[Pixel] {
        &self.members
    }

    pub fn contains(&self, p: Pixel) -> bool {
        self.members.contains(&p)
    }
}

/// Normalised Gaussian weight `exp(-|x_k - x_t|^2)` of neighbour `t`, with
/// distances in pixel units.
pub fn shepard_weight(center: Pixel, t: Pixel, neighborhood: &PixelNeighborhood) -> Result<f64> {
    if neighborhood.center != center {
        return Err(Error::InvalidArgument(format!(
            "neighbourhood is centred at {:?}, not {center:?}",
            neighborhood.center
        )));
    }
    if !neighborhood.contains(t) {
        return Err(Error::InvalidArgument(format!(
            "pixel {t:?} is not in the neighbourhood of {center:?}"
        )));
    }
    let total: f64 = neighborhood
        .members
        .iter()
        .map(|&m| (-center.squared_distance(m)).exp())
        .sum();
    Ok((-center.squared_distance(t)).exp() / total)
}

/// Recombines overlapping patch estimates into a channel.
///
/// Pixel `k` averages the `rho^2` estimates that patches centred in its
/// neighbourhood make for it. Patch centres that fall outside the image do
/// not exist, so near the border the weights are renormalised over the
/// remaining contributors. The result is clamped into `[0, 255]`.
pub fn merge_patches(patches: &PatchMatrix) -> Result<Channel> {
    let n = patches.side();
    let rho = patches.rho();
    let half = (rho / 2) as isize;
    let rows = patches.rows();
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite patch entry".into()));
    }

    // Unnormalised kernel indexed by offset within the patch.
    let kernel: Vec<f64> = (-half..=half)
        .flat_map(|di| (-half..=half).map(move |dj| (-((di * di + dj * dj) as f64)).exp()))
        .collect();

    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, line)| {
        let i = i as isize;
        for (j, px) in line.iter_mut().enumerate() {
            let j = j as isize;
            let mut acc = 0.0;
            let mut norm = 0.0;
            for di in -half..=half {
                let ti = i + di;
                if ti < 0 || ti >= n as isize {
                    continue;
                }
                for dj in -half..=half {
                    let tj = j + dj;
                    if tj < 0 || tj >= n as isize {
                        continue;
                    }
                    let w = kernel[((di + half) * rho as isize + dj + half) as usize];
                    // Pixel k sits at offset (k - t) from the centre of patch t.
                    let slot = ((half - di) * rho as isize + (half - dj)) as usize;
                    acc += w * rows[[(ti as usize) * n + tj as usize, slot]];
                    norm += w;
                }
            }
            *px = acc / norm;
        }
    });
    Channel::from_clamped(n, out)
}
