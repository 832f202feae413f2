use rayon::prelude::*;

use super::patches::PatchMatrix;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::Real;

/// Rows per parallel block. Partial sums are always combined in block
/// order, so results do not depend on the thread count.
const BLOCK_ROWS: usize = 2048;

/// Relative eigenvalue floor below which a principal direction counts as
/// absent.
const RANK_TOLERANCE: f64 = 1e-12;

/// PCA whitening: `z = projection * (x - mean)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WhiteningTransform<T = f64> {
    pub mean: Vec<T>,
    /// `n x d`; row `k` is the `k`-th principal direction divided by the
    /// square root of its variance.
    pub projection: Matrix<T>,
    /// Variances of the retained components, descending.
    pub variances: Vec<T>,
}

impl<T: Real> WhiteningTransform<T> {
    pub fn components(&self) -> usize {
        self.projection.rows()
    }

    pub fn apply_row(&self, x: &[T]) -> Vec<T> {
        let centered: Vec<T> = x.iter().zip(&self.mean).map(|(&a, &m)| a - m).collect();
        self.projection.mul_vec(&centered)
    }

    /// Whitens every row of `data`.
    pub fn apply(&self, data: &Matrix<T>) -> Matrix<T> {
        let n = self.components();
        let mut out = Vec::with_capacity(data.rows() * n);
        for r in 0..data.rows() {
            out.extend(self.apply_row(data.row(r)));
        }
        Matrix::from_vec(data.rows(), n, out).expect("shape computed above")
    }
}

/// Column means of `data`.
pub fn column_means<T: Real>(data: &Matrix<T>) -> Vec<T> {
    let d = data.cols();
    let partial: Vec<Vec<T>> = data
        .data()
        .par_chunks(BLOCK_ROWS * d.max(1))
        .map(|block| {
            let mut acc = vec![T::zero(); d];
            for row in block.chunks_exact(d) {
                for (a, &v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
            acc
        })
        .collect();
    let mut sum = vec![T::zero(); d];
    for p in partial {
        for (s, v) in sum.iter_mut().zip(p) {
            *s += v;
        }
    }
    let m = T::lit(data.rows() as f64);
    sum.into_iter().map(|s| s / m).collect()
}

/// Unbiased sample covariance (divides by `rows - 1`) about `mean`.
pub fn covariance<T: Real>(data: &Matrix<T>, mean: &[T]) -> Matrix<T> {
    let d = data.cols();
    let tri = d * (d + 1) / 2;
    let partial: Vec<Vec<T>> = data
        .data()
        .par_chunks(BLOCK_ROWS * d.max(1))
        .map(|block| {
            let mut acc = vec![T::zero(); tri];
            let mut centered = vec![T::zero(); d];
            for row in block.chunks_exact(d) {
                for ((c, &v), &m) in centered.iter_mut().zip(row).zip(mean) {
                    *c = v - m;
                }
                let mut k = 0;
                for i in 0..d {
                    let ci = centered[i];
                    for &cj in &centered[i..] {
                        acc[k] += ci * cj;
                        k += 1;
                    }
                }
            }
            acc
        })
        .collect();
    let mut upper = vec![T::zero(); tri];
    for p in partial {
        for (s, v) in upper.iter_mut().zip(p) {
            *s += v;
        }
    }
    let denom = T::lit((data.rows().max(2) - 1) as f64);
    let mut cov = Matrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            let v = upper[k] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
            k += 1;
        }
    }
    cov
}

/// Fits a whitening transform onto the top `components` principal directions
/// of the rows of `data`.
pub fn fit_whitening_matrix<T: Real>(data: &Matrix<T>, components: usize) -> Result<WhiteningTransform<T>> {
    let d = data.cols();
    if components == 0 || components > d {
        return Err(Error::InvalidParameter(format!(
            "component count must be in [1, {d}], got {components}"
        )));
    }
    if data.rows() < 2 {
        return Err(Error::InvalidParameter("whitening needs at least two samples".into()));
    }
    let mean = column_means(data);
    let cov = covariance(data, &mean);
    let eig = symmetric_eigen(&cov)?;

    let top = eig.values[0];
    let floor = T::lit(RANK_TOLERANCE) * top;
    let rank = if top > T::zero() {
        eig.values.iter().take_while(|&&v| v > floor).count()
    } else {
        0
    };
    if rank < components {
        return Err(Error::RankDeficient {
            requested: components,
            rank,
        });
    }

    let mut projection = Matrix::zeros(components, d);
    for k in 0..components {
        let scale = T::one() / eig.values[k].sqrt();
        // fix the sign so the largest-magnitude entry is positive
        let col: Vec<T> = (0..d).map(|r| eig.vectors[(r, k)]).collect();
        let pivot = col
            .iter()
            .copied()
            .fold(T::zero(), |best, v| if v.abs() > best.abs() { v } else { best });
        let sign = if pivot < T::zero() { -T::one() } else { T::one() };
        for (r, v) in col.into_iter().enumerate() {
            projection[(k, r)] = v * scale * sign;
        }
    }
    Ok(WhiteningTransform {
        mean,
        projection,
        variances: eig.values[..components].to_vec(),
    })
}

/// Whitening for a patch corpus; keeps at most `size^2 - 1` components since
/// DC removal leaves the constant direction empty.
pub fn fit_whitening<T: Real>(patches: &PatchMatrix<T>, components: usize) -> Result<WhiteningTransform<T>> {
    let dim = patches.patch_size() * patches.patch_size();
    if components == 0 || components > dim - 1 {
        return Err(Error::InvalidParameter(format!(
            "component count must be in [1, {}], got {components}",
            dim - 1
        )));
    }
    if patches.count() <= dim {
        return Err(Error::InvalidParameter(format!(
            "need more than {dim} patches, got {}",
            patches.count()
        )));
    }
    fit_whitening_matrix(patches.matrix(), components)
}

/// Largest entry-wise deviation of the sample covariance of `z` from the
/// identity.
pub fn identity_deviation<T: Real>(z: &Matrix<T>) -> T {
    let mean = column_means(z);
    let cov = covariance(z, &mean);
    let n = z.cols();
    cov.max_abs_diff(&Matrix::identity(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(m: usize, scales: &[f64], seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(m, scales.len(), |_, c| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scales[c] + 3.0
        })
    }

    /// Covariance computed with a plain double loop, independent of the
    /// blocked implementation.
    fn naive_cov(z: &Matrix<f64>) -> Matrix<f64> {
        let (m, n) = (z.rows(), z.cols());
        let mean: Vec<f64> = (0..n).map(|c| (0..m).map(|r| z[(r, c)]).sum::<f64>() / m as f64).collect();
        Matrix::from_fn(n, n, |i, j| {
            (0..m).map(|r| (z[(r, i)] - mean[i]) * (z[(r, j)] - mean[j])).sum::<f64>() / (m - 1) as f64
        })
    }

    #[test]
    fn anisotropic_gaussian_is_whitened() {
        // covariance diag(4, 1)
        let data = gaussian(100_000, &[2.0, 1.0], 42);
        let w = fit_whitening_matrix(&data, 2).unwrap();
        let z = w.apply(&data);
        let cov = naive_cov(&z);
        assert!(cov.max_abs_diff(&Matrix::identity(2)) < 1e-6, "{cov:?}");
        assert!((w.variances[0] / w.variances[1] - 4.0).abs() < 0.1);
    }

    #[test]
    fn isotropic_data_gives_orthonormal_projection_up_to_scale() {
        let data = gaussian(100_000, &[1.5, 1.5, 1.5], 7);
        let w = fit_whitening_matrix(&data, 3).unwrap();
        let p = &w.projection;
        let ppt = p.matmul(&p.transpose()).unwrap();
        let scale = ppt[(0, 0)];
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { scale } else { 0.0 };
                assert!((ppt[(i, j)] - expected).abs() < 0.02 * scale, "{ppt:?}");
            }
        }
        assert!(naive_cov(&w.apply(&data)).max_abs_diff(&Matrix::identity(3)) < 1e-6);
    }

    #[test]
    fn constant_column_limits_rank() {
        let mut data = gaussian(1000, &[1.0, 2.0], 3);
        for r in 0..data.rows() {
            data[(r, 1)] = 5.0;
        }
        match fit_whitening_matrix(&data, 2) {
            Err(Error::RankDeficient { requested: 2, rank: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(fit_whitening_matrix(&data, 1).is_ok());
    }

    #[test]
    fn blocked_covariance_matches_naive() {
        let data = gaussian(5000, &[1.0, 0.5, 3.0, 2.0], 11);
        let mean = column_means(&data);
        assert!(covariance(&data, &mean).max_abs_diff(&naive_cov(&data)) < 1e-9);
    }

    #[test]
    fn patch_component_limits() {
        let m = Matrix::from_fn(100, 9, |r, c| ((r * 7 + c * 3) % 11) as f64);
        let p = PatchMatrix::from_matrix(3, m).unwrap();
        assert!(fit_whitening(&p, 9).is_err());
        assert!(fit_whitening(&p, 0).is_err());
        let few = PatchMatrix::from_matrix(3, Matrix::<f64>::zeros(9, 9)).unwrap();
        assert!(fit_whitening(&few, 2).is_err());
    }
}
