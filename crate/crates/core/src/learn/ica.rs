//! Symmetric FastICA with the `tanh` contrast.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::Real;

const BLOCK_ROWS: usize = 2048;

/// RNG stream used for the initial unmixing guess, kept apart from the
/// patch-sampling stream of the same seed.
const INIT_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FastIca {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FastIca {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcaResult<T = f64> {
    /// `n x n`, orthonormal rows.
    pub unmixing: Matrix<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs FastICA with default settings.
pub fn fast_ica<T: Real>(whitened: &Matrix<T>, seed: u64) -> Result<IcaResult<T>> {
    FastIca::default().fit(whitened, seed)
}

impl FastIca {
    /// Estimates the unmixing matrix for whitened rows of `whitened`.
    ///
    /// Convergence is `max_i |1 - |<w_i_new, w_i_old>|| < tolerance`. Hitting
    /// the iteration limit is reported through [`IcaResult::converged`], not
    /// as an error.
    pub fn fit<T: Real>(&self, whitened: &Matrix<T>, seed: u64) -> Result<IcaResult<T>> {
        let n = whitened.cols();
        let m = whitened.rows();
        if n == 0 || m < 2 {
            return Err(Error::InvalidParameter(format!(
                "ICA needs at least two samples of dimension >= 1, got {m}x{n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(INIT_STREAM);
        let init = Matrix::from_fn(n, n, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            T::lit(v)
        });
        let mut w = symmetric_decorrelation(&init, 0)?;
        let tol = T::lit(self.tolerance);
        let inv_m = T::one() / T::lit(m as f64);

        for iteration in 1..=self.max_iterations {
            let (gz, gprime) = contrast_moments(whitened, &w);
            let mut next = Matrix::zeros(n, n);
            for i in 0..n {
                let d = gprime[i] * inv_m;
                for j in 0..n {
                    next[(i, j)] = gz[(i, j)] * inv_m - d * w[(i, j)];
                }
            }
            if !next.is_finite() {
                return Err(Error::NonFinite { iteration });
            }
            let next = symmetric_decorrelation(&next, iteration)?;
            let change = (0..n)
                .map(|i| {
                    let c: T = next.row(i).iter().zip(w.row(i)).map(|(&a, &b)| a * b).sum();
                    (T::one() - c.abs()).abs()
                })
                .fold(T::zero(), T::max);
            w = next;
            if change < tol {
                return Ok(IcaResult {
                    unmixing: w,
                    iterations: iteration,
                    converged: true,
                });
            }
        }
        log::warn!(
            "FastICA did not converge within {} iterations",
            self.max_iterations
        );
        Ok(IcaResult {
            unmixing: w,
            iterations: self.max_iterations,
            converged: false,
        })
    }
}

/// Returns `sum_t g(W z_t) z_t^T` and `sum_t g'(W z_t)` with `g = tanh`.
fn contrast_moments<T: Real>(z: &Matrix<T>, w: &Matrix<T>) -> (Matrix<T>, Vec<T>) {
    let n = z.cols();
    let partial: Vec<(Vec<T>, Vec<T>)> = z
        .data()
        .par_chunks(BLOCK_ROWS * n)
        .map(|block| {
            let mut gz = vec![T::zero(); n * n];
            let mut gp = vec![T::zero(); n];
            let mut y = vec![T::zero(); n];
            for row in block.chunks_exact(n) {
                for (i, yi) in y.iter_mut().enumerate() {
                    let g: T = w.row(i).iter().zip(row).map(|(&a, &b)| a * b).sum();
                    *yi = g.tanh();
                }
                for i in 0..n {
                    let g = y[i];
                    gp[i] += T::one() - g * g;
                    for (acc, &zj) in gz[i * n..(i + 1) * n].iter_mut().zip(row) {
                        *acc += g * zj;
                    }
                }
            }
            (gz, gp)
        })
        .collect();
    let mut gz = vec![T::zero(); n * n];
    let mut gp = vec![T::zero(); n];
    for (a, b) in partial {
        for (s, v) in gz.iter_mut().zip(a) {
            *s += v;
        }
        for (s, v) in gp.iter_mut().zip(b) {
            *s += v;
        }
    }
    (Matrix::from_vec(n, n, gz).expect("n x n"), gp)
}

/// `(W W^T)^{-1/2} W`.
pub fn symmetric_decorrelation<T: Real>(w: &Matrix<T>, iteration: usize) -> Result<Matrix<T>> {
    let n = w.rows();
    let wwt = w.matmul(&w.transpose())?;
    let eig = symmetric_eigen(&wwt)?;
    if eig.values.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::NonFinite { iteration });
    }
    let inv_sqrt = Matrix::from_fn(n, n, |r, c| {
        (0..n)
            .map(|k| eig.vectors[(r, k)] * eig.vectors[(c, k)] / eig.values[k].sqrt())
            .sum()
    });
    inv_sqrt.matmul(w)
}

/// Largest deviation of `W W^T` from the identity.
pub fn orthonormality_error<T: Real>(w: &Matrix<T>) -> T {
    let wwt = w.matmul(&w.transpose()).expect("square");
    wwt.max_abs_diff(&Matrix::identity(w.rows()))
}
