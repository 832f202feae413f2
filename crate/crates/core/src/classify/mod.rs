//! Binary gender classifiers: boosted stumps and a Gini random forest.
//!
//! Labels are `+1` for male and `-1` for female throughout.

mod boost;
mod dataset;
mod forest;
mod io;
mod stump;

use std::fmt;
use std::str::FromStr;

pub use boost::{
    fit_adaboost, fit_adaboost_with_history, fit_logitboost, fit_logitboost_with_history, logistic_loss,
    BoostKind, BoostModel, WeightedStump,
};
pub use dataset::LabeledDataset;
pub use forest::{fit_forest, gini, ForestModel, ForestParams, Node, Tree, DEFAULT_TREES};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, MODEL_MAGIC};
pub use stump::StumpModel;

use crate::error::{Error, Result};
use crate::normalize::Gender;
use crate::scalar::Real;

pub const DEFAULT_ROUNDS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction<T = f64> {
    pub label: Gender,
    /// Signed margin for boosting, male vote fraction for forests.
    pub score: T,
}

/// Anything that can label a feature vector. New learners plug into the
/// harness by implementing this and adding a [`ClassifierSpec`] variant.
pub trait Classifier<T: Real> {
    fn dim(&self) -> usize;
    fn predict(&self, x: &[T]) -> Result<Prediction<T>>;
}

/// Classifier configuration as written in grid keys and on the command line:
/// `adaboost[:T]`, `logitboost[:T]`, `forest[:trees[:features[:depth]]]`
/// where `features` and `depth` accept `auto` / `none`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierSpec {
    AdaBoost { rounds: usize },
    LogitBoost { rounds: usize },
    Forest {
        trees: usize,
        features_per_split: Option<usize>,
        max_depth: Option<usize>,
    },
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::AdaBoost { rounds: DEFAULT_ROUNDS }
    }
}

impl ClassifierSpec {
    /// The forest seed comes from the caller; boosting ignores it.
    pub fn fit<T: Real>(&self, data: &LabeledDataset<T>, seed: u64) -> Result<Model<T>> {
        Ok(match *self {
            ClassifierSpec::AdaBoost { rounds } => Model::Boost(fit_adaboost(data, rounds)?),
            ClassifierSpec::LogitBoost { rounds } => Model::Boost(fit_logitboost(data, rounds)?),
            ClassifierSpec::Forest {
                trees,
                features_per_split,
                max_depth,
            } => Model::Forest(fit_forest(
                data,
                &ForestParams {
                    trees,
                    features_per_split,
                    max_depth,
                    seed,
                },
            )?),
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            ClassifierSpec::AdaBoost { .. } => "adaboost",
            ClassifierSpec::LogitBoost { .. } => "logitboost",
            ClassifierSpec::Forest { .. } => "forest",
        }
    }
}

fn opt_str(v: Option<usize>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |n| n.to_string())
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ClassifierSpec::AdaBoost { rounds } | ClassifierSpec::LogitBoost { rounds } => {
                write!(f, "{}:{rounds}", self.family())
            }
            ClassifierSpec::Forest {
                trees,
                features_per_split,
                max_depth,
            } => {
                write!(f, "forest:{trees}")?;
                if features_per_split.is_some() || max_depth.is_some() {
                    write!(f, ":{}:{}", opt_str(features_per_split, "auto"), opt_str(max_depth, "none"))?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ClassifierSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognized classifier '{s}'"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let count = |p: Option<&&str>, default: usize| -> Result<usize> {
            match p {
                None => Ok(default),
                Some(v) => match v.parse::<usize>() {
                    Ok(n) if n >= 1 => Ok(n),
                    _ => Err(bad()),
                },
            }
        };
        let optional = |p: Option<&&str>, none: &str| -> Result<Option<usize>> {
            match p {
                None => Ok(None),
                Some(v) if v.eq_ignore_ascii_case(none) => Ok(None),
                Some(_) => count(p, 0).map(Some),
            }
        };
        let spec = match parts[0].to_ascii_lowercase().as_str() {
            "adaboost" | "adaboostm1" | "adaboost_m1" if parts.len() <= 2 => ClassifierSpec::AdaBoost {
                rounds: count(parts.get(1), DEFAULT_ROUNDS)?,
            },
            "logitboost" if parts.len() <= 2 => ClassifierSpec::LogitBoost {
                rounds: count(parts.get(1), DEFAULT_ROUNDS)?,
            },
            "forest" | "rf" | "randomforest" if parts.len() <= 4 => ClassifierSpec::Forest {
                trees: count(parts.get(1), DEFAULT_TREES)?,
                features_per_split: optional(parts.get(2), "auto")?,
                max_depth: optional(parts.get(3), "none")?,
            },
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

/// A fitted model of any supported family.
#[derive(Clone, Debug, PartialEq)]
pub enum Model<T = f64> {
    Boost(BoostModel<T>),
    Forest(ForestModel<T>),
}

impl<T: Real> Model<T> {
    pub fn kind_name(&self) -> String {
        match self {
            Model::Boost(b) => b.kind.to_string(),
            Model::Forest(_) => "forest".to_string(),
        }
    }
}

impl<T: Real> Classifier<T> for Model<T> {
    fn dim(&self) -> usize {
        match self {
            Model::Boost(m) => m.dim(),
            Model::Forest(m) => m.dim(),
        }
    }

    fn predict(&self, x: &[T]) -> Result<Prediction<T>> {
        match self {
            Model::Boost(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
        }
    }
}
