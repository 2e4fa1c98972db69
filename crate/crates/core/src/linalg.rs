//! Dense linear algebra for the denoiser: Gramian centring, QR
//! orthonormalization, a one-sided Jacobi SVD and the randomized SVD built
//! on top of them.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::{Error, Result, Seed};

/// Rows per block in [`par_matmul`]. Fixed so the summation order of every
/// output entry does not depend on the thread count.
const MATMUL_BLOCK: usize = 128;

/// Relative column-norm threshold below which QR treats a column as
/// linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

const MAX_JACOBI_SWEEPS: usize = 80;

/// `a * b`, parallel over fixed row blocks of `a`.
pub fn par_matmul(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let mut out = Array2::<f64>::zeros((a.nrows(), b.ncols()));
    out.axis_chunks_iter_mut(Axis(0), MATMUL_BLOCK)
        .into_par_iter()
        .zip(a.axis_chunks_iter(Axis(0), MATMUL_BLOCK).into_par_iter())
        .for_each(|(mut dst, src)| {
            ndarray::linalg::general_mat_mul(1.0, &src, &b, 0.0, &mut dst);
        });
    out
}

/// Double-centred Gramian of a distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Gramian(Array2<f64>);

impl Gramian {
    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }
}

/// `G[i,j] = -1/2 (D[i,j] - rowmean_i - colmean_j + mean)`.
pub fn double_center(distances: ArrayView2<f64>) -> Result<Gramian> {
    double_center_owned(distances.to_owned())
}

/// In-place variant of [`double_center`] that reuses the distance buffer.
pub fn double_center_owned(mut d: Array2<f64>) -> Result<Gramian> {
    let (rows, cols) = d.dim();
    if rows != cols {
        return Err(Error::InvalidInput(format!(
            "distance matrix must be square, got {rows}x{cols}"
        )));
    }
    if rows == 0 {
        return Ok(Gramian(d));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "distance matrix has non-finite entries".into(),
        ));
    }
    let n = rows as f64;
    // Row and column sums use the same sequential order, so a symmetric
    // input yields identical row and column means and an exactly symmetric
    // result.
    let row_mean: Vec<f64> = d
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|r| r.iter().fold(0.0, |acc, v| acc + v) / n)
        .collect();
    let mut col_mean = vec![0.0; cols];
    for r in d.axis_iter(Axis(0)) {
        for (acc, v) in col_mean.iter_mut().zip(r.iter()) {
            *acc += v;
        }
    }
    col_mean.iter_mut().for_each(|v| *v /= n);
    let grand = row_mean.iter().sum::<f64>() / n;

    d.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(row_mean.par_iter())
        .for_each(|(mut r, &mi)| {
            for (v, &mj) in r.iter_mut().zip(col_mean.iter()) {
                *v = -0.5 * (*v - (mi + mj) + grand);
            }
        });
    Ok(Gramian(d))
}

/// Orthonormal basis produced by [`qr_orthonormalize`].
#[derive(Clone, Debug)]
pub struct Orthonormalized {
    pub q: Array2<f64>,
    /// Input columns found numerically dependent and left out of `q`.
    pub dropped: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Gram-Schmidt with a second full reorthogonalization pass. Columns whose
/// residual falls below [`RANK_TOLERANCE`] times the largest input column
/// norm are dropped.
pub fn qr_orthonormalize(y: ArrayView2<f64>) -> Result<Orthonormalized> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let m = y.nrows();
    let columns: Vec<Vec<f64>> = y.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
    let scale = columns.iter().map(|c| dot(c, c).sqrt()).fold(0.0, f64::max);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(columns.len());
    let mut dropped = 0;
    for mut col in columns {
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(q, &col);
                axpy(-proj, q, &mut col);
            }
        }
        let norm = dot(&col, &col).sqrt();
        if scale == 0.0 || norm <= RANK_TOLERANCE * scale {
            dropped += 1;
            continue;
        }
        col.iter_mut().for_each(|v| *v /= norm);
        basis.push(col);
    }

    let mut q = Array2::<f64>::zeros((m, basis.len()));
    for (j, col) in basis.iter().enumerate() {
        q.column_mut(j).assign(&Array1::from_vec(col.clone()));
    }
    Ok(Orthonormalized { q, dropped })
}

/// Thin singular value decomposition `A ~ U diag(values) V^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularTriplets {
    /// Non-increasing, non-negative.
    pub values: Array1<f64>,
    /// `m x L`, orthonormal columns.
    pub left: Array2<f64>,
    /// `n x L`, orthonormal columns.
    pub right: Array2<f64>,
}

impl SingularTriplets {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn truncated(mut self, count: usize) -> Self {
        let k = count.min(self.count());
        self.values = self.values.slice(s![..k]).to_owned();
        self.left = self.left.slice(s![.., ..k]).to_owned();
        self.right = self.right.slice(s![.., ..k]).to_owned();
        self
    }

    /// `U diag(values) V^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let mut scaled = self.left.clone();
        for (mut c, &v) in scaled.axis_iter_mut(Axis(1)).zip(self.values.iter()) {
            c.mapv_inplace(|x| x * v);
        }
        scaled.dot(&self.right.t())
    }
}

/// One-sided (Hestenes) Jacobi on a tall matrix given as columns. Returns
/// `(column norms, normalized columns, accumulated rotations)` sorted by
/// decreasing norm.
fn jacobi_tall(mut cols: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let k = cols.len();
    let rows = cols.first().map_or(0, Vec::len);
    let mut rot: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (rows.max(1) as f64).sqrt();
    // Columns below this norm are rounding noise of a rank-deficient input.
    // They are never rotated, since they cannot become relatively
    // orthogonal, and count as zero at the end.
    let frobenius = cols.iter().map(|c| dot(c, c)).sum::<f64>().sqrt();
    let negligible = frobenius * f64::EPSILON * rows.max(k).max(1) as f64;
    let negligible_sq = negligible * negligible;

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in i + 1..k {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if alpha <= negligible_sq || beta <= negligible_sq {
                    continue;
                }
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                let (lo, hi) = cols.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, sn);
                let (lo, hi) = rot.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let mut sorted_norms = Vec::with_capacity(k);
    let mut units: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut rotations = Vec::with_capacity(k);
    for &i in &order {
        sorted_norms.push(norms[i]);
        rotations.push(rot[i].clone());
        // Sorted by norm, so the negligible columns come last.
        if norms[i] > negligible && norms[i] > 0.0 {
            units.push(cols[i].iter().map(|v| v / norms[i]).collect());
        }
    }
    complete_basis(&mut units, k, rows);
    (sorted_norms, units, rotations)
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Extends an orthonormal `basis` of `R^len` vectors to `target` vectors.
///
/// Each new vector starts from the standard basis vector with the smallest
/// leverage `sum_b b_j^2`, i.e. the largest residual after projecting out
/// the current basis. Those residuals sum to `len - basis.len()`, so the
/// chosen one has squared norm at least `1 - basis.len() / len`.
fn complete_basis(basis: &mut Vec<Vec<f64>>, target: usize, len: usize) {
    assert!(
        target <= len,
        "cannot fit {target} orthonormal vectors in R^{len}"
    );
    let mut leverage = vec![0.0; len];
    for b in basis.iter() {
        for (l, v) in leverage.iter_mut().zip(b) {
            *l += v * v;
        }
    }
    while basis.len() < target {
        let j = (0..len)
            .min_by(|&a, &b| leverage[a].total_cmp(&leverage[b]).then(a.cmp(&b)))
            .expect("len is positive");
        let mut v = vec![0.0; len];
        v[j] = 1.0;
        for _ in 0..2 {
            for b in basis.iter() {
                let p = dot(b, &v);
                axpy(-p, b, &mut v);
            }
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        for (l, x) in leverage.iter_mut().zip(&v) {
            *l += x * x;
        }
        basis.push(v);
    }
}

fn columns_to_array(cols: &[Vec<f64>], rows: usize) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((rows, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            out[[i, j]] = *v;
        }
    }
    out
}

/// Thin SVD with `min(m, n)` triplets, values in non-increasing order.
pub fn exact_svd(a: ArrayView2<f64>) -> Result<SingularTriplets> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let (m, n) = a.dim();
    // Work on whichever orientation is tall.
    let tall = if m >= n { a } else { a.t() };
    let (rows, cols) = tall.dim();
    let columns: Vec<Vec<f64>> = tall.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
    let (values, units, rotations) = jacobi_tall(columns);

    let units = columns_to_array(&units, rows);
    let rotations = columns_to_array(&rotations, cols);
    let values = Array1::from_vec(values);
    Ok(if m >= n {
        SingularTriplets {
            values,
            left: units,
            right: rotations,
        }
    } else {
        SingularTriplets {
            values,
            left: rotations,
            right: units,
        }
    })
}

/// Randomized SVD of an `m x n` matrix.
///
/// A Gaussian test matrix with `rank + oversample` columns (capped at
/// `min(m, n)`) sketches the range of `a`; the sketch is orthonormalized
/// and the small projected matrix `Q^T a` is decomposed exactly. Returns at
/// most `rank` triplets, fewer when `a` has lower numerical rank.
pub fn rsvd(
    a: ArrayView2<f64>,
    rank: usize,
    oversample: usize,
    seed: Seed,
) -> Result<SingularTriplets> {
    let (m, n) = a.dim();
    if rank == 0 || rank > m.min(n) {
        return Err(Error::InvalidParameter(format!(
            "target rank {rank} must lie in 1..={}",
            m.min(n)
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let samples = (rank + oversample).min(m.min(n));

    // Drawn sequentially before any parallel work.
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let omega = Array2::from_shape_simple_fn((n, samples), || StandardNormal.sample(&mut rng));

    let sketch = par_matmul(a, omega.view());
    let q = qr_orthonormalize(sketch.view())?.q;
    if q.ncols() == 0 {
        return Ok(SingularTriplets {
            values: Array1::zeros(0),
            left: Array2::zeros((m, 0)),
            right: Array2::zeros((n, 0)),
        });
    }
    // B^T = a^T Q, computed blockwise over rows of a^T.
    let projected_t = par_matmul(a.t(), q.view());
    let small = exact_svd(projected_t.t())?;
    let left = q.dot(&small.left);
    Ok(SingularTriplets {
        values: small.values,
        left,
        right: small.right,
    }
    .truncated(rank))
}
