use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const MIN_PATCH_SIZE: usize = 3;
pub const MAX_PATCH_SIZE: usize = 63;
pub const DEFAULT_PATCH_COUNT: usize = 50_000;

/// `count x size^2` matrix of vectorized, DC-removed patches.
///
/// Patches are vectorized row-major: element `v * size + u` is the pixel in
/// patch row `v`, column `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchMatrix<T = f64> {
    patch_size: usize,
    data: Matrix<T>,
}

impl<T: Real> PatchMatrix<T> {
    pub fn from_matrix(patch_size: usize, data: Matrix<T>) -> Result<Self> {
        check_patch_size(patch_size)?;
        if data.cols() != patch_size * patch_size {
            return Err(Error::Dimensions(format!(
                "patch rows must have {} values, got {}",
                patch_size * patch_size,
                data.cols()
            )));
        }
        Ok(Self { patch_size, data })
    }

    #[inline]
    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.data.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix<T> {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.data
    }
}

pub(crate) fn check_patch_size(l: usize) -> Result<()> {
    if l % 2 == 0 || !(MIN_PATCH_SIZE..=MAX_PATCH_SIZE).contains(&l) {
        return Err(Error::InvalidParameter(format!(
            "patch size must be odd and in [{MIN_PATCH_SIZE}, {MAX_PATCH_SIZE}], got {l}"
        )));
    }
    Ok(())
}

/// Draws `count` patches uniformly over (image, position) and removes each
/// patch's mean. Values are in unit intensity (pixel / 255). Images smaller
/// than the patch are skipped with a warning.
pub fn sample_patches<T: Real>(
    images: &[GrayImage],
    patch_size: usize,
    count: usize,
    seed: u64,
) -> Result<PatchMatrix<T>> {
    check_patch_size(patch_size)?;
    let dim = patch_size * patch_size;
    if count < 10 * dim {
        return Err(Error::InvalidParameter(format!(
            "need at least {} patches for size {patch_size}, got {count}",
            10 * dim
        )));
    }
    let usable: Vec<&GrayImage> = images
        .iter()
        .enumerate()
        .filter_map(|(i, img)| {
            if img.width() >= patch_size && img.height() >= patch_size {
                Some(img)
            } else {
                log::warn!(
                    "skipping image {i} ({}x{}): smaller than {patch_size}x{patch_size} patch",
                    img.width(),
                    img.height()
                );
                None
            }
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::NoUsableImages { patch_size });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv_dim = T::one() / T::lit(dim as f64);
    let unit = T::one() / T::lit(255.0);
    let mut data = Vec::with_capacity(count * dim);
    for _ in 0..count {
        let img = usable[rng.random_range(0..usable.len())];
        let x0 = rng.random_range(0..=img.width() - patch_size);
        let y0 = rng.random_range(0..=img.height() - patch_size);
        let start = data.len();
        for v in 0..patch_size {
            let row = &img.data()[(y0 + v) * img.width() + x0..][..patch_size];
            data.extend(row.iter().map(|&p| T::lit(p as f64)));
        }
        let patch = &mut data[start..];
        let mean = patch.iter().copied().sum::<T>() * inv_dim;
        for p in patch.iter_mut() {
            *p = (*p - mean) * unit;
        }
    }
    PatchMatrix::from_matrix(patch_size, Matrix::from_vec(count, dim, data)?)
}
