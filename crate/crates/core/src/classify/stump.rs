use super::dataset::LabeledDataset;
use crate::scalar::Real;

/// Axis-aligned threshold classifier: `polarity` when `x[feature_index] >
/// threshold`, `-polarity` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StumpModel<T = f64> {
    pub feature_index: usize,
    pub threshold: T,
    pub polarity: i8,
}

impl<T: Real> StumpModel<T> {
    #[inline]
    pub fn eval(&self, x: &[T]) -> i8 {
        if x[self.feature_index] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

/// Visits every candidate split of one presorted feature: the midpoint
/// between each pair of consecutive distinct values. The callback runs once
/// per sorted position with the sample that just joined the `<=` side and
/// the threshold after it (NaN when the next value is equal, i.e. no split).
#[inline]
pub(crate) fn for_each_split<T: Real>(
    data: &LabeledDataset<T>,
    feature: usize,
    order: &[u32],
    mut visit: impl FnMut(T, usize),
) {
    for k in 0..order.len().saturating_sub(1) {
        let a = data.value(order[k] as usize, feature);
        let b = data.value(order[k + 1] as usize, feature);
        if a < b {
            visit((a + b) / T::lit(2.0), order[k] as usize);
        } else {
            visit(T::nan(), order[k] as usize);
        }
    }
}

/// Weighted-error-minimizing stump over all features, midpoints and both
/// polarities. Ties go to the lowest feature index, then the lowest
/// threshold, then polarity +1. Returns `None` when no feature has two
/// distinct values.
pub(crate) fn best_weighted_stump<T: Real>(
    data: &LabeledDataset<T>,
    sorted: &[Vec<u32>],
    weights: &[T],
) -> Option<(StumpModel<T>, T)> {
    let (mut tot_pos, mut tot_neg) = (T::zero(), T::zero());
    for (i, &w) in weights.iter().enumerate() {
        if data.label(i) > 0 {
            tot_pos += w;
        } else {
            tot_neg += w;
        }
    }
    let mut best: Option<(StumpModel<T>, T)> = None;
    for (j, order) in sorted.iter().enumerate() {
        let (mut l_pos, mut l_neg) = (T::zero(), T::zero());
        for_each_split(data, j, order, |threshold, last| {
            if data.label(last) > 0 {
                l_pos += weights[last];
            } else {
                l_neg += weights[last];
            }
            if threshold.is_nan() {
                return;
            }
            // +1 above the threshold: errors are positives below, negatives above
            let err_plus = l_pos + (tot_neg - l_neg);
            let err_minus = l_neg + (tot_pos - l_pos);
            for (polarity, err) in [(1i8, err_plus), (-1i8, err_minus)] {
                if best.as_ref().is_none_or(|(_, e)| err < *e) {
                    best = Some((
                        StumpModel {
                            feature_index: j,
                            threshold,
                            polarity,
                        },
                        err,
                    ));
                }
            }
        });
    }
    best
}

/// Weighted least-squares regression stump: piecewise-constant fit of
/// `targets` with one split. Returns the split, the `<=` side value and the
/// `>` side value.
pub(crate) fn best_regression_stump<T: Real>(
    data: &LabeledDataset<T>,
    sorted: &[Vec<u32>],
    weights: &[T],
    targets: &[T],
) -> Option<(usize, T, T, T)> {
    let tot_w: T = weights.iter().copied().sum();
    let tot_wz: T = weights.iter().zip(targets).map(|(&w, &z)| w * z).sum();
    // maximizing S_L^2/W_L + S_R^2/W_R minimizes the weighted SSE
    let mut best: Option<(usize, T, T, T, T)> = None;
    for (j, order) in sorted.iter().enumerate() {
        let (mut wl, mut wzl) = (T::zero(), T::zero());
        for_each_split(data, j, order, |threshold, last| {
            wl += weights[last];
            wzl += weights[last] * targets[last];
            if threshold.is_nan() {
                return;
            }
            let wr = tot_w - wl;
            let wzr = tot_wz - wzl;
            if !(wl > T::zero() && wr > T::zero()) {
                return;
            }
            let score = wzl * wzl / wl + wzr * wzr / wr;
            if best.as_ref().is_none_or(|b| score > b.4) {
                best = Some((j, threshold, wzl / wl, wzr / wr, score));
            }
        });
    }
    best.map(|(j, t, l, r, _)| (j, t, l, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn dataset(rows: &[(&[f64], i8)]) -> LabeledDataset {
        let d = rows[0].0.len();
        let m = Matrix::from_vec(rows.len(), d, rows.iter().flat_map(|r| r.0.iter().copied()).collect()).unwrap();
        LabeledDataset::new(
            m,
            rows.iter().map(|r| r.1).collect(),
            (0..rows.len()).map(|i| i.to_string()).collect(),
        )
        .unwrap()
    }

    /// Exhaustive oracle: every (feature, midpoint, polarity) triple scored
    /// directly against the weights, no sorting or prefix sums.
    fn oracle(data: &LabeledDataset, w: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..data.dim() {
            let mut vals: Vec<f64> = (0..data.len()).map(|i| data.value(i, j)).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            for pair in vals.windows(2) {
                let t = (pair[0] + pair[1]) / 2.0;
                for pol in [1i8, -1] {
                    let s = StumpModel {
                        feature_index: j,
                        threshold: t,
                        polarity: pol,
                    };
                    let err: f64 = (0..data.len())
                        .filter(|&i| s.eval(data.row(i)) != data.label(i))
                        .map(|i| w[i])
                        .sum();
                    best = best.min(err);
                }
            }
        }
        best
    }

    #[test]
    fn first_round_stump_matches_exhaustive_search() {
        let mut s = 99u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 40) as f64 / (1u64 << 24) as f64
        };
        for trial in 0..20 {
            let m = 30 + trial;
            let rows: Vec<(Vec<f64>, i8)> = (0..m)
                .map(|_| {
                    let x: Vec<f64> = (0..4).map(|_| (next() * 10.0).round() / 2.0).collect();
                    let y = if x[trial % 4] + next() * 3.0 > 4.0 { 1 } else { -1 };
                    (x, y)
                })
                .collect();
            let refs: Vec<(&[f64], i8)> = rows.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
            if refs.iter().all(|r| r.1 == refs[0].1) {
                continue;
            }
            let data = dataset(&refs);
            let w = vec![1.0 / m as f64; m];
            let (stump, err) = best_weighted_stump(&data, &data.presort(), &w).unwrap();
            let expected = oracle(&data, &w);
            assert!((err - expected).abs() < 1e-12, "trial {trial}: {err} vs {expected}");
            let direct: f64 = (0..m).filter(|&i| stump.eval(data.row(i)) != data.label(i)).map(|i| w[i]).sum();
            assert!((direct - err).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_prefer_low_feature_and_threshold() {
        // both features separate perfectly
        let data = dataset(&[(&[0.0, 0.0], -1), (&[1.0, 1.0], 1), (&[2.0, 2.0], 1)]);
        let (s, e) = best_weighted_stump(&data, &data.presort(), &[1.0 / 3.0; 3]).unwrap();
        assert_eq!((s.feature_index, s.threshold, s.polarity), (0, 0.5, 1));
        assert_eq!(e, 0.0);
    }

    #[test]
    fn constant_features_have_no_split() {
        let data = dataset(&[(&[1.0], -1), (&[1.0], 1)]);
        assert!(best_weighted_stump(&data, &data.presort(), &[0.5, 0.5]).is_none());
        assert!(best_regression_stump(&data, &data.presort(), &[0.5, 0.5], &[1.0, -1.0]).is_none());
    }

    #[test]
    fn regression_stump_splits_between_groups() {
        let data = dataset(&[(&[-1.0], -1), (&[1.0], 1)]);
        let (j, t, l, r) = best_regression_stump(&data, &data.presort(), &[0.25, 0.25], &[-2.0, 2.0]).unwrap();
        assert_eq!((j, t, l, r), (0, 0.0, -2.0, 2.0));
    }
}
