//! Evaluation protocol: manifests, subject-disjoint splits, single runs,
//! cross-validation, the parameter grid and the synthetic corpus.

mod banks;
mod experiment;
mod grid;
mod manifest;
mod split;
mod synth;

pub use banks::{BankSource, FixedBanks, LearnedBanks};
pub use experiment::{
    cross_validate, encode_samples, run_config, train_and_test, ClassCounts, CvSummary, PreparedCorpus, Protocol,
    ResultRecord, RunConfig, Sample,
};
pub use grid::{best_row, read_results, run_grid, write_results, GridOptions, GridSpec, ResultRow, DEFAULT_BITS, DEFAULT_FILTER_SIZES};
pub use manifest::{load_manifest, write_manifest, DatasetManifest, ManifestEntry};
pub use split::{make_split, SplitPlan, DEFAULT_TRAIN_FRACTION, FOLDS, MIN_SUBJECTS_PER_GENDER};
pub use synth::{
    render_eye, synth_strip, synthetic_corpus, synthetic_eye_images, synthetic_natural_images, write_synthetic_corpus,
    EyeGeometry, SynthParams,
};
