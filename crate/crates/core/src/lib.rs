//! Binary statistical image features (BSIF) for normalized iris strips.
//!
//! The crate covers the whole pipeline: rubber-sheet normalization of an
//! annotated eye image, ICA filter learning from patch corpora, code-image
//! encoding with a swappable boundary [`PaddingStrategy`], histogram and
//! full-image features, stump-based boosting and random forests, and a
//! subject-disjoint evaluation harness.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root pin the common instantiations.

pub mod bsif;
pub mod classify;
pub mod error;
pub mod harness;
pub mod imaging;
pub mod learn;
pub mod linalg;
pub mod normalize;
pub mod scalar;

pub use bsif::{encode, filter_responses, full_image_feature, histogram_feature, pad_image, CodeImage, FeatureKind, FeatureVector, HistogramMode, PaddingMode, PaddingStrategy, ResponseStack};
pub use classify::{Classifier, ClassifierSpec, LabeledDataset, Model, Prediction};
pub use error::{Error, Result};
pub use imaging::{bilinear_sample, load_gray, save_gray, BitMask, Circle, FloatImage, GrayImage};
pub use learn::{learn_filterbank, load_filterbank, save_filterbank, CorpusKind, FilterBank, PatchMatrix, WhiteningTransform};
pub use linalg::Matrix;
pub use normalize::{apply_mask_zero, rubber_sheet, Eye, Gender, IrisAnnotation, NormalizedIris};
pub use scalar::Real;

pub type FloatImage64 = FloatImage<f64>;
pub type FloatImage32 = FloatImage<f32>;
pub type NormalizedIris64 = NormalizedIris<f64>;
pub type NormalizedIris32 = NormalizedIris<f32>;
pub type FilterBank64 = FilterBank<f64>;
pub type FilterBank32 = FilterBank<f32>;
pub type FeatureVector64 = FeatureVector<f64>;
pub type FeatureVector32 = FeatureVector<f32>;
pub type LabeledDataset64 = LabeledDataset<f64>;
pub type LabeledDataset32 = LabeledDataset<f32>;
pub type Model64 = Model<f64>;
pub type Model32 = Model<f32>;
