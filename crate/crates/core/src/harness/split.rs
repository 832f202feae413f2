//! Subject-disjoint train/test split with stratified cross-validation folds.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::normalize::Gender;

pub const FOLDS: usize = 5;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
pub const MIN_SUBJECTS_PER_GENDER: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    pub train_subjects: BTreeSet<String>,
    pub test_subjects: BTreeSet<String>,
    /// `FOLDS` disjoint subsets covering `train_subjects`.
    pub folds: Vec<BTreeSet<String>>,
    pub seed: u64,
}

impl SplitPlan {
    /// Training subjects outside fold `k`.
    pub fn fold_train(&self, k: usize) -> BTreeSet<String> {
        self.train_subjects.difference(&self.folds[k]).cloned().collect()
    }

    /// Structural invariants: train and test disjoint, folds partition train.
    pub fn check(&self) -> Result<()> {
        if let Some(s) = self.train_subjects.intersection(&self.test_subjects).next() {
            return Err(Error::Split(format!("subject {s:?} is in both train and test")));
        }
        let mut seen = BTreeSet::new();
        for fold in &self.folds {
            for s in fold {
                if !seen.insert(s) {
                    return Err(Error::Split(format!("subject {s:?} is in two folds")));
                }
            }
        }
        if seen.len() != self.train_subjects.len() || seen.iter().any(|s| !self.train_subjects.contains(*s)) {
            return Err(Error::Split("folds do not partition the training subjects".into()));
        }
        Ok(())
    }
}

/// Splits `(subject_id, gender)` pairs. Each gender is shuffled with the
/// seed and `round(fraction * count)` of it goes to training; training
/// subjects are then dealt round-robin into folds, males first, so every
/// fold gets an even share of both genders.
///
/// Subjects of unknown gender are ignored. Duplicate ids are an error.
pub fn make_split(subjects: &[(String, Gender)], train_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut unique = BTreeSet::new();
    for (s, _) in subjects {
        if !unique.insert(s) {
            return Err(Error::Split(format!("subject {s:?} listed twice")));
        }
    }
    let by_gender = |g: Gender| -> Vec<&String> {
        let mut v: Vec<&String> = subjects.iter().filter(|(_, x)| *x == g).map(|(s, _)| s).collect();
        v.sort();
        v
    };
    let mut males = by_gender(Gender::Male);
    let mut females = by_gender(Gender::Female);
    if males.len() < MIN_SUBJECTS_PER_GENDER || females.len() < MIN_SUBJECTS_PER_GENDER {
        return Err(Error::Split(format!(
            "need at least {MIN_SUBJECTS_PER_GENDER} subjects per gender, got {} male and {} female",
            males.len(),
            females.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    males.shuffle(&mut rng);
    females.shuffle(&mut rng);

    let mut plan = SplitPlan {
        train_subjects: BTreeSet::new(),
        test_subjects: BTreeSet::new(),
        folds: vec![BTreeSet::new(); FOLDS],
        seed,
    };
    let mut next_fold = 0;
    for group in [&males, &females] {
        let n_train = ((train_fraction * group.len() as f64).round() as usize).clamp(1, group.len() - 1);
        for (i, s) in group.iter().enumerate() {
            if i < n_train {
                plan.train_subjects.insert((*s).clone());
                plan.folds[next_fold].insert((*s).clone());
                next_fold = (next_fold + 1) % FOLDS;
            } else {
                plan.test_subjects.insert((*s).clone());
            }
        }
    }
    Ok(plan)
}
