use crate::bsif::FeatureVector;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::normalize::Gender;
use crate::scalar::Real;

/// `m x d` feature matrix with +1 (male) / -1 (female) labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset<T = f64> {
    features: Matrix<T>,
    labels: Vec<i8>,
    subject_ids: Vec<String>,
}

impl<T: Real> LabeledDataset<T> {
    pub fn new(features: Matrix<T>, labels: Vec<i8>, subject_ids: Vec<String>) -> Result<Self> {
        if labels.len() != features.rows() || subject_ids.len() != features.rows() {
            return Err(Error::Dimensions(format!(
                "{} feature rows, {} labels, {} subject ids",
                features.rows(),
                labels.len(),
                subject_ids.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::InvalidParameter(format!("label {l} is not +1 or -1")));
        }
        if !features.is_finite() {
            return Err(Error::InvalidParameter("features contain NaN or infinity".into()));
        }
        Ok(Self {
            features,
            labels,
            subject_ids,
        })
    }

    /// Builds a dataset from labeled feature vectors; the source id doubles
    /// as the subject id.
    pub fn from_features(vectors: &[FeatureVector<T>]) -> Result<Self> {
        let d = vectors.first().map_or(0, |v| v.values.len());
        let mut data = Vec::with_capacity(vectors.len() * d);
        let mut labels = Vec::with_capacity(vectors.len());
        let mut ids = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.values.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.values.len(),
                });
            }
            let label = v.label.sign().ok_or_else(|| {
                Error::InvalidParameter(format!("sample {} has no gender label", v.source_id))
            })?;
            data.extend_from_slice(&v.values);
            labels.push(label);
            ids.push(v.source_id.clone());
        }
        Self::new(Matrix::from_vec(vectors.len(), d, data)?, labels, ids)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        self.features.row(i)
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> T {
        self.features[(i, j)]
    }

    #[inline]
    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn gender(&self, i: usize) -> Gender {
        Gender::from_sign(self.labels[i])
    }

    /// Errors unless both classes are present and `d >= 1`.
    pub fn require_trainable(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::DegenerateData("zero-dimensional features".into()));
        }
        let pos = self.labels.iter().filter(|&&l| l > 0).count();
        if pos == 0 || pos == self.len() {
            return Err(Error::DegenerateData(format!(
                "training set of {} samples has a single class",
                self.len()
            )));
        }
        Ok(())
    }

    /// Same samples with every label negated.
    pub fn with_flipped_labels(&self) -> Self {
        Self {
            features: self.features.clone(),
            labels: self.labels.iter().map(|&l| -l).collect(),
            subject_ids: self.subject_ids.clone(),
        }
    }

    /// Per-feature sample orderings, ascending by value with ties kept in
    /// index order.
    pub(crate) fn presort(&self) -> Vec<Vec<u32>> {
        (0..self.dim())
            .map(|j| {
                let mut idx: Vec<u32> = (0..self.len() as u32).collect();
                idx.sort_by(|&a, &b| {
                    self.value(a as usize, j)
                        .partial_cmp(&self.value(b as usize, j))
                        .expect("finite features")
                });
                idx
            })
            .collect()
    }
}
