//! AdaBoost.M1 and two-class LogitBoost over decision stumps.

use std::fmt;

use super::dataset::LabeledDataset;
use super::stump::{best_regression_stump, best_weighted_stump, StumpModel};
use super::{Classifier, Prediction};
use crate::error::{Error, Result};
use crate::normalize::Gender;
use crate::scalar::Real;

/// Floor on the weighted error when a stump is perfect, giving
/// `alpha = 0.5 * ln((1 - 1e-10) / 1e-10) ~ 11.5`.
const PERFECT_STUMP_ERROR: f64 = 1e-10;
const LOGIT_Z_MAX: f64 = 4.0;
const LOGIT_WEIGHT_FLOOR: f64 = 2e-16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoostKind {
    AdaBoostM1,
    LogitBoost,
}

impl fmt::Display for BoostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoostKind::AdaBoostM1 => "adaboost",
            BoostKind::LogitBoost => "logitboost",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedStump<T = f64> {
    pub stump: StumpModel<T>,
    pub weight: T,
}

/// Additive stump model: `score(x) = bias + sum_t weight_t * h_t(x)`.
///
/// AdaBoost leaves `bias` at zero. LogitBoost folds the mean of each
/// regression stump into `bias` so every stored weight is non-negative.
#[derive(Clone, Debug, PartialEq)]
pub struct BoostModel<T = f64> {
    pub kind: BoostKind,
    pub dim: usize,
    /// Requested rounds; fewer stumps are kept after an early stop.
    pub rounds: usize,
    pub bias: T,
    pub stumps: Vec<WeightedStump<T>>,
}

impl<T: Real> BoostModel<T> {
    fn raw_score(&self, x: &[T]) -> T {
        self.stumps.iter().fold(self.bias, |acc, ws| {
            acc + ws.weight * T::lit(ws.stump.eval(x) as f64)
        })
    }
}

impl<T: Real> Classifier<T> for BoostModel<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Signed margin; zero counts as male.
    fn predict(&self, x: &[T]) -> Result<Prediction<T>> {
        if self.stumps.is_empty() {
            return Err(Error::EmptyModel);
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let score = self.raw_score(x);
        let label = if score >= T::zero() { Gender::Male } else { Gender::Female };
        Ok(Prediction { label, score })
    }
}

pub fn fit_adaboost<T: Real>(data: &LabeledDataset<T>, rounds: usize) -> Result<BoostModel<T>> {
    fit_adaboost_with_history(data, rounds).map(|(m, _)| m)
}

/// AdaBoost.M1; also returns the weighted training error of every stump
/// that was added.
pub fn fit_adaboost_with_history<T: Real>(
    data: &LabeledDataset<T>,
    rounds: usize,
) -> Result<(BoostModel<T>, Vec<T>)> {
    check_rounds(rounds)?;
    data.require_trainable()?;
    let m = data.len();
    let sorted = data.presort();
    let mut weights = vec![T::one() / T::lit(m as f64); m];
    let mut stumps = Vec::new();
    let mut history = Vec::new();
    let half = T::lit(0.5);

    for _ in 0..rounds {
        let Some((stump, err)) = best_weighted_stump(data, &sorted, &weights) else {
            break;
        };
        if err >= half {
            break;
        }
        let perfect = err <= T::zero();
        let eps = if perfect { T::lit(PERFECT_STUMP_ERROR) } else { err };
        let alpha = half * ((T::one() - eps) / eps).ln();
        stumps.push(WeightedStump { stump, weight: alpha });
        history.push(err);
        if perfect {
            break;
        }
        let mut total = T::zero();
        for (i, w) in weights.iter_mut().enumerate() {
            let agree = T::lit((data.label(i) * stump.eval(data.row(i))) as f64);
            *w *= (-alpha * agree).exp();
            total += *w;
        }
        for w in &mut weights {
            *w /= total;
        }
    }
    if stumps.is_empty() {
        return Err(Error::DegenerateData(
            "no stump does better than chance on the training data".into(),
        ));
    }
    Ok((
        BoostModel {
            kind: BoostKind::AdaBoostM1,
            dim: data.dim(),
            rounds,
            bias: T::zero(),
            stumps,
        },
        history,
    ))
}

pub fn fit_logitboost<T: Real>(data: &LabeledDataset<T>, rounds: usize) -> Result<BoostModel<T>> {
    fit_logitboost_with_history(data, rounds).map(|(m, _)| m)
}

/// Two-class LogitBoost with regression stumps. The history holds the
/// training logistic loss `sum_i ln(1 + exp(-2 y_i F(x_i)))` after each
/// round.
pub fn fit_logitboost_with_history<T: Real>(
    data: &LabeledDataset<T>,
    rounds: usize,
) -> Result<(BoostModel<T>, Vec<T>)> {
    check_rounds(rounds)?;
    data.require_trainable()?;
    let m = data.len();
    let sorted = data.presort();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let z_max = T::lit(LOGIT_Z_MAX);
    let floor = T::lit(LOGIT_WEIGHT_FLOOR);

    let mut f = vec![T::zero(); m];
    let mut weights = vec![T::zero(); m];
    let mut targets = vec![T::zero(); m];
    let mut bias = T::zero();
    let mut stumps = Vec::new();
    let mut history = Vec::new();

    for _ in 0..rounds {
        for i in 0..m {
            // p = P(male | x) = e^F / (e^F + e^-F)
            let p = T::one() / (T::one() + (-two * f[i]).exp());
            let z = if data.label(i) > 0 { T::one() / p } else { -T::one() / (T::one() - p) };
            targets[i] = z.max(-z_max).min(z_max);
            weights[i] = (p * (T::one() - p)).max(floor);
        }
        let Some((feature_index, threshold, left, right)) =
            best_regression_stump(data, &sorted, &weights, &targets)
        else {
            break;
        };
        let mid = (left + right) * half;
        let delta = (right - left) * half;
        let polarity = if delta < T::zero() { -1 } else { 1 };
        let stump = StumpModel {
            feature_index,
            threshold,
            polarity,
        };
        bias += half * mid;
        stumps.push(WeightedStump {
            stump,
            weight: half * delta.abs(),
        });
        for i in 0..m {
            let leaf = if data.value(i, feature_index) > threshold { right } else { left };
            f[i] += half * leaf;
        }
        history.push(logistic_loss(data, &f));
    }
    if stumps.is_empty() {
        return Err(Error::DegenerateData("every feature is constant".into()));
    }
    Ok((
        BoostModel {
            kind: BoostKind::LogitBoost,
            dim: data.dim(),
            rounds,
            bias,
            stumps,
        },
        history,
    ))
}

/// `sum_i ln(1 + exp(-2 y_i F(x_i)))` for raw additive scores `f`.
pub fn logistic_loss<T: Real>(data: &LabeledDataset<T>, f: &[T]) -> T {
    let two = T::lit(2.0);
    f.iter()
        .enumerate()
        .map(|(i, &fi)| {
            let margin = -two * T::lit(data.label(i) as f64) * fi;
            // ln(1 + e^x) without overflow
            if margin > T::zero() {
                margin + (-margin).exp().ln_1p()
            } else {
                margin.exp().ln_1p()
            }
        })
        .sum()
}

fn check_rounds(rounds: usize) -> Result<()> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("boosting needs at least one round".into()));
    }
    Ok(())
}
