//! Filter learning: patch sampling, PCA whitening, FastICA and the filter
//! bank container with its binary file format.

mod bank;
mod ica;
mod patches;
mod whitening;

pub use bank::{learn_filterbank, load_filterbank, save_filterbank, CorpusKind, FilterBank, MAX_BITS};
pub use ica::{fast_ica, orthonormality_error, symmetric_decorrelation, FastIca, IcaResult};
pub use patches::{sample_patches, PatchMatrix, DEFAULT_PATCH_COUNT, MAX_PATCH_SIZE, MIN_PATCH_SIZE};
pub use whitening::{
    column_means, covariance, fit_whitening, fit_whitening_matrix, identity_deviation, WhiteningTransform,
};
