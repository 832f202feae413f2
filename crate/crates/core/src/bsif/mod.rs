//! Code-image encoding: boundary padding, filter responses, binarization and
//! feature vectors.

mod encode;
mod features;
mod padding;

pub use encode::{codes_from_responses, encode, filter_responses, CodeImage, ResponseStack};
pub use features::{
    full_image_feature, histogram_feature, read_features_csv, save_code_image, write_features_csv, FeatureKind,
    FeatureVector, HistogramMode,
};
pub use padding::{pad_image, PaddingMode, PaddingStrategy};
