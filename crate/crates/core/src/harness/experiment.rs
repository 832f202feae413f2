//! Single-configuration evaluation under the subject-disjoint protocol.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::manifest::DatasetManifest;
use super::split::{SplitPlan, DEFAULT_TRAIN_FRACTION, FOLDS};
use crate::bsif::{encode, full_image_feature, histogram_feature, CodeImage, FeatureKind, HistogramMode, PaddingStrategy};
use crate::classify::{Classifier, ClassifierSpec, LabeledDataset};
use crate::error::{Error, Result};
use crate::learn::FilterBank;
use crate::linalg::Matrix;
use crate::normalize::{apply_mask_zero, rubber_sheet, Eye, Gender, NormalizedIris, DEFAULT_ANGULAR, DEFAULT_RADIAL};

/// One normalized, mask-zeroed eye image.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub sample_id: String,
    pub subject_id: String,
    pub eye: Eye,
    pub gender: Gender,
    pub iris: NormalizedIris,
}

/// Strips ready for encoding, plus the corpus name used in config hashes.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedCorpus {
    pub name: String,
    pub samples: Vec<Sample>,
}

impl PreparedCorpus {
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self> {
        let mut genders: BTreeMap<&str, Gender> = BTreeMap::new();
        for s in &samples {
            if let Some(g) = genders.insert(&s.subject_id, s.gender) {
                if g != s.gender {
                    return Err(Error::Manifest(format!("subject {:?} has two genders", s.subject_id)));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            samples,
        })
    }

    /// Loads, unwraps and mask-zeroes every manifest entry (in parallel).
    pub fn from_manifest(manifest: &DatasetManifest, radial: usize, angular: usize) -> Result<Self> {
        let samples = manifest
            .entries
            .par_iter()
            .map(|e| {
                let (image, ann) = e.load()?;
                let iris: NormalizedIris = rubber_sheet(&image, &ann, radial, angular)?;
                Ok(Sample {
                    iris: apply_mask_zero(&iris).with_meta(e.sample_id.clone(), e.eye, e.gender),
                    sample_id: e.sample_id.clone(),
                    subject_id: e.subject_id.clone(),
                    eye: e.eye,
                    gender: e.gender,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(manifest.source_name.clone(), samples)
    }

    pub fn from_manifest_default(manifest: &DatasetManifest) -> Result<Self> {
        Self::from_manifest(manifest, DEFAULT_RADIAL, DEFAULT_ANGULAR)
    }

    /// Distinct `(subject_id, gender)` pairs in id order.
    pub fn subjects(&self) -> Vec<(String, Gender)> {
        let map: BTreeMap<&str, Gender> = self.samples.iter().map(|s| (s.subject_id.as_str(), s.gender)).collect();
        map.into_iter().map(|(s, g)| (s.to_string(), g)).collect()
    }

    /// One sample index per subject for `eye`, drawn with the seed.
    /// Subjects are visited in id order and their images in sample-id order,
    /// so the choice does not depend on manifest row order.
    pub fn select_per_subject(&self, eye: Eye, seed: u64) -> Vec<usize> {
        let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            if s.eye == eye && s.gender != Gender::Unknown {
                by_subject.entry(&s.subject_id).or_default().push(i);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2 + u64::from(eye == Eye::Right));
        by_subject
            .into_values()
            .map(|mut v| {
                v.sort_by(|&a, &b| self.samples[a].sample_id.cmp(&self.samples[b].sample_id));
                v[rng.random_range(0..v.len())]
            })
            .collect()
    }

    /// Same strips with genders permuted across subjects: a null corpus.
    pub fn with_shuffled_labels(&self, seed: u64) -> Self {
        let subjects = self.subjects();
        let mut genders: Vec<Gender> = subjects.iter().map(|(_, g)| *g).collect();
        genders.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let map: BTreeMap<&str, Gender> = subjects.iter().map(|(s, _)| s.as_str()).zip(genders).collect();
        let mut out = self.clone();
        for s in &mut out.samples {
            s.gender = map[s.subject_id.as_str()];
            s.iris.gender = s.gender;
        }
        out.name = format!("{}-shuffled-{seed}", self.name);
        out
    }
}

/// Settings shared by every configuration of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Protocol {
    pub seed: u64,
    pub train_fraction: f64,
    pub histogram_mode: HistogramMode,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            seed: 0,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            histogram_mode: HistogramMode::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RunConfig {
    pub eye: Eye,
    pub padding: PaddingStrategy,
    pub filter_size: usize,
    pub bits: usize,
    pub feature: FeatureKind,
    pub classifier: ClassifierSpec,
}

impl RunConfig {
    /// Sort key; numeric fields are zero-padded so lexicographic order is
    /// numeric order.
    pub fn key(&self) -> String {
        format!(
            "{}|{}|{:02}|{:02}|{}|{}",
            self.eye, self.padding, self.filter_size, self.bits, self.feature, self.classifier
        )
    }

    /// First 16 hex digits of SHA-256 over the key and everything else that
    /// changes the result.
    pub fn hash(&self, protocol: &Protocol, corpus: &str) -> String {
        let text = format!(
            "{}|seed={}|train={}|hist={}|corpus={corpus}",
            self.key(),
            protocol.seed,
            protocol.train_fraction,
            protocol.histogram_mode.as_str()
        );
        Sha256::digest(text.as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub male_correct: usize,
    pub male_total: usize,
    pub female_correct: usize,
    pub female_total: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.male_total + self.female_total
    }

    pub fn accuracy(&self) -> f64 {
        (self.male_correct + self.female_correct) as f64 / self.total() as f64
    }

    fn record(&mut self, truth: Gender, predicted: Gender) {
        let hit = usize::from(truth == predicted);
        match truth {
            Gender::Male => {
                self.male_total += 1;
                self.male_correct += hit;
            }
            _ => {
                self.female_total += 1;
                self.female_correct += hit;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub config: RunConfig,
    pub config_hash: String,
    pub accuracy: f64,
    pub counts: ClassCounts,
    pub train_size: usize,
    pub test_size: usize,
    pub seconds: Option<f64>,
}

/// Code images for the given samples.
pub fn encode_samples(corpus: &PreparedCorpus, indices: &[usize], bank: &FilterBank, padding: PaddingStrategy) -> Result<Vec<CodeImage>> {
    indices
        .iter()
        .map(|&i| {
            let s = &corpus.samples[i].iris;
            encode(&s.strip, &s.mask, bank, padding)
        })
        .collect()
}

fn feature_rows(codes: &[&CodeImage], kind: FeatureKind, mode: HistogramMode) -> Result<Matrix> {
    let rows = codes
        .iter()
        .map(|c| match kind {
            FeatureKind::Histogram => histogram_feature(c, mode).map(|f| f.values),
            FeatureKind::FullImage => Ok(full_image_feature(c).values),
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let d = rows.first().map_or(0, Vec::len);
    Matrix::from_vec(rows.len(), d, rows.concat())
}

/// Features, labels and subjects of the `indices` whose subject is in `subjects`.
fn dataset(
    corpus: &PreparedCorpus,
    indices: &[usize],
    codes: &[CodeImage],
    subjects: &BTreeSet<String>,
    kind: FeatureKind,
    mode: HistogramMode,
) -> Result<LabeledDataset> {
    let picked: Vec<usize> = (0..indices.len())
        .filter(|&k| subjects.contains(&corpus.samples[indices[k]].subject_id))
        .collect();
    let code_refs: Vec<&CodeImage> = picked.iter().map(|&k| &codes[k]).collect();
    let features = feature_rows(&code_refs, kind, mode)?;
    let labels = picked
        .iter()
        .map(|&k| corpus.samples[indices[k]].gender.sign().expect("selection skips unknown gender"))
        .collect();
    let ids = picked.iter().map(|&k| corpus.samples[indices[k]].subject_id.clone()).collect();
    LabeledDataset::new(features, labels, ids)
}

/// Fits on `train` subjects, scores once on `test` subjects.
#[allow(clippy::too_many_arguments)]
pub fn train_and_test(
    corpus: &PreparedCorpus,
    indices: &[usize],
    codes: &[CodeImage],
    train: &BTreeSet<String>,
    test: &BTreeSet<String>,
    feature: FeatureKind,
    classifier: ClassifierSpec,
    protocol: &Protocol,
) -> Result<(ClassCounts, usize)> {
    let train_set = dataset(corpus, indices, codes, train, feature, protocol.histogram_mode)?;
    let test_set = dataset(corpus, indices, codes, test, feature, protocol.histogram_mode)?;
    if test_set.is_empty() {
        return Err(Error::Split("no test samples for this eye".into()));
    }
    let model = classifier.fit(&train_set, protocol.seed)?;
    let mut counts = ClassCounts::default();
    for i in 0..test_set.len() {
        counts.record(test_set.gender(i), model.predict(test_set.row(i))?.label);
    }
    Ok((counts, train_set.len()))
}

/// Encodes, trains on the full training split and evaluates once on test.
/// Errors are wrapped with the configuration key.
pub fn run_config(
    corpus: &PreparedCorpus,
    split: &SplitPlan,
    config: &RunConfig,
    bank: &FilterBank,
    protocol: &Protocol,
) -> Result<ResultRecord> {
    let run = || -> Result<ResultRecord> {
        check_bank(bank, config)?;
        let indices = corpus.select_per_subject(config.eye, protocol.seed);
        let codes = encode_samples(corpus, &indices, bank, config.padding)?;
        let (counts, train_size) = train_and_test(
            corpus,
            &indices,
            &codes,
            &split.train_subjects,
            &split.test_subjects,
            config.feature,
            config.classifier,
            protocol,
        )?;
        Ok(ResultRecord {
            config: *config,
            config_hash: config.hash(protocol, &corpus.name),
            accuracy: counts.accuracy(),
            counts,
            train_size,
            test_size: counts.total(),
            seconds: None,
        })
    };
    run().map_err(|e| with_config(config, e))
}

pub(crate) fn with_config(config: &RunConfig, e: Error) -> Error {
    Error::Config {
        config: config.key(),
        source: Box::new(e),
    }
}

pub(crate) fn check_bank(bank: &FilterBank, config: &RunConfig) -> Result<()> {
    if bank.size() != config.filter_size || bank.bits() != config.bits {
        return Err(Error::InvalidParameter(format!(
            "bank is {}x{} with {} bits, config wants {}x{} with {} bits",
            bank.size(),
            bank.size(),
            bank.bits(),
            config.filter_size,
            config.filter_size,
            config.bits
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvSummary {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
}

/// Five-fold cross-validation over the training subjects: each fold is
/// scored by a model fitted on the other four.
pub fn cross_validate(
    corpus: &PreparedCorpus,
    split: &SplitPlan,
    config: &RunConfig,
    bank: &FilterBank,
    protocol: &Protocol,
) -> Result<CvSummary> {
    let run = || -> Result<CvSummary> {
        check_bank(bank, config)?;
        let indices = corpus.select_per_subject(config.eye, protocol.seed);
        let codes = encode_samples(corpus, &indices, bank, config.padding)?;
        let fold_accuracies = (0..FOLDS)
            .map(|k| {
                let (counts, _) = train_and_test(
                    corpus,
                    &indices,
                    &codes,
                    &split.fold_train(k),
                    &split.folds[k],
                    config.feature,
                    config.classifier,
                    protocol,
                )?;
                Ok(counts.accuracy())
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = fold_accuracies.iter().sum::<f64>() / FOLDS as f64;
        let var = fold_accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / FOLDS as f64;
        Ok(CvSummary {
            fold_accuracies,
            mean,
            std: var.sqrt(),
        })
    };
    run().map_err(|e| with_config(config, e))
}
