//! Random forest of Gini-split decision trees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dataset::LabeledDataset;
use super::{Classifier, Prediction};
use crate::error::{Error, Result};
use crate::normalize::Gender;
use crate::scalar::Real;

pub const DEFAULT_TREES: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub enum Node<T = f64> {
    Leaf {
        male: u32,
        female: u32,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: T,
        left: u32,
        right: u32,
    },
}

/// Node arena; index 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree<T = f64> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Real> Tree<T> {
    /// Majority class at the reached leaf; ties go to male.
    pub fn vote(&self, x: &[T]) -> Gender {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { male, female } => {
                    return if male >= female { Gender::Male } else { Gender::Female };
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForestParams {
    pub trees: usize,
    /// Features examined per split; `None` means `floor(sqrt(d))`.
    pub features_per_split: Option<usize>,
    /// `None` grows trees to purity.
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: DEFAULT_TREES,
            features_per_split: None,
            max_depth: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestModel<T = f64> {
    pub dim: usize,
    pub trees: Vec<Tree<T>>,
    pub features_per_split: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl<T: Real> ForestModel<T> {
    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Out-of-bag accuracy on the training set the forest was fitted on.
    /// Bootstrap draws are replayed from the per-tree seeds.
    pub fn oob_accuracy(&self, data: &LabeledDataset<T>) -> Result<f64> {
        if data.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: data.dim(),
            });
        }
        let m = data.len();
        let mut votes = vec![(0u32, 0u32); m];
        for (t, tree) in self.trees.iter().enumerate() {
            let mut in_bag = vec![false; m];
            let mut rng = tree_rng(self.seed, t);
            for i in bootstrap(&mut rng, m) {
                in_bag[i] = true;
            }
            for i in (0..m).filter(|&i| !in_bag[i]) {
                match tree.vote(data.row(i)) {
                    Gender::Male => votes[i].0 += 1,
                    _ => votes[i].1 += 1,
                }
            }
        }
        let (mut counted, mut correct) = (0usize, 0usize);
        for (i, &(male, female)) in votes.iter().enumerate() {
            if male + female == 0 {
                continue;
            }
            counted += 1;
            let pred = if male >= female { Gender::Male } else { Gender::Female };
            if pred == data.gender(i) {
                correct += 1;
            }
        }
        if counted == 0 {
            return Err(Error::DegenerateData("no out-of-bag samples".into()));
        }
        Ok(correct as f64 / counted as f64)
    }
}

impl<T: Real> Classifier<T> for ForestModel<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Score is the fraction of trees voting male; a tie predicts male.
    fn predict(&self, x: &[T]) -> Result<Prediction<T>> {
        if self.trees.is_empty() {
            return Err(Error::EmptyModel);
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let male = self.trees.iter().filter(|t| t.vote(x) == Gender::Male).count();
        let label = if 2 * male >= self.trees.len() { Gender::Male } else { Gender::Female };
        Ok(Prediction {
            label,
            score: T::lit(male as f64 / self.trees.len() as f64),
        })
    }
}

/// Gini impurity `1 - sum_k p_k^2` of a two-class node.
pub fn gini(male: usize, female: usize) -> f64 {
    let n = (male + female) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (pm, pf) = (male as f64 / n, female as f64 / n);
    1.0 - pm * pm - pf * pf
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

fn bootstrap(rng: &mut ChaCha8Rng, m: usize) -> Vec<usize> {
    (0..m).map(|_| rng.random_range(0..m)).collect()
}

/// Trees are grown independently (in parallel) from per-tree RNG streams
/// derived from `(seed, tree_index)`, so the result does not depend on the
/// thread count.
pub fn fit_forest<T: Real>(data: &LabeledDataset<T>, params: &ForestParams) -> Result<ForestModel<T>> {
    if params.trees == 0 {
        return Err(Error::InvalidParameter("a forest needs at least one tree".into()));
    }
    if params.max_depth == Some(0) {
        return Err(Error::InvalidParameter("max depth must be at least 1".into()));
    }
    data.require_trainable()?;
    let d = data.dim();
    let fps = params
        .features_per_split
        .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
        .clamp(1, d);
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(params.seed, t);
            let sample = bootstrap(&mut rng, data.len());
            grow_tree(data, sample, fps, params.max_depth, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        dim: d,
        trees,
        features_per_split: fps,
        max_depth: params.max_depth,
        seed: params.seed,
    })
}

struct SplitChoice<T> {
    feature: usize,
    threshold: T,
    gain: f64,
}

fn grow_tree<T: Real>(
    data: &LabeledDataset<T>,
    sample: Vec<usize>,
    features_per_split: usize,
    max_depth: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Tree<T> {
    let mut nodes = vec![Node::Leaf { male: 0, female: 0 }];
    let mut stack = vec![(0usize, sample, 0usize)];
    let mut features: Vec<usize> = (0..data.dim()).collect();
    while let Some((slot, idx, depth)) = stack.pop() {
        let male = idx.iter().filter(|&&i| data.label(i) > 0).count();
        let female = idx.len() - male;
        let leaf = Node::Leaf {
            male: male as u32,
            female: female as u32,
        };
        if male == 0 || female == 0 || max_depth.is_some_and(|md| depth >= md) {
            nodes[slot] = leaf;
            continue;
        }
        features.shuffle(rng);
        let Some(choice) = best_split(data, &idx, &features, features_per_split, male, female) else {
            nodes[slot] = leaf;
            continue;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| data.value(i, choice.feature) <= choice.threshold);
        debug_assert!(!left.is_empty() && !right.is_empty());
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { male: 0, female: 0 });
        nodes.push(Node::Leaf { male: 0, female: 0 });
        nodes[slot] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left: li as u32,
            right: ri as u32,
        };
        stack.push((ri, right, depth + 1));
        stack.push((li, left, depth + 1));
    }
    Tree { nodes }
}

/// Examines features in the given (shuffled) order until
/// `features_per_split` non-constant ones have been scored.
fn best_split<T: Real>(
    data: &LabeledDataset<T>,
    idx: &[usize],
    features: &[usize],
    features_per_split: usize,
    male: usize,
    female: usize,
) -> Option<SplitChoice<T>> {
    let n = idx.len();
    let parent = gini(male, female);
    let mut best: Option<SplitChoice<T>> = None;
    let mut examined = 0;
    let mut order: Vec<(T, i8)> = Vec::with_capacity(n);
    for &j in features {
        if examined == features_per_split {
            break;
        }
        order.clear();
        order.extend(idx.iter().map(|&i| (data.value(i, j), data.label(i))));
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        if order[0].0 == order[n - 1].0 {
            continue;
        }
        examined += 1;
        let (mut lm, mut lf) = (0usize, 0usize);
        for k in 0..n - 1 {
            if order[k].1 > 0 {
                lm += 1;
            } else {
                lf += 1;
            }
            if order[k].0 == order[k + 1].0 {
                continue;
            }
            let nl = k + 1;
            let nr = n - nl;
            let weighted = (nl as f64 * gini(lm, lf) + nr as f64 * gini(male - lm, female - lf)) / n as f64;
            let gain = parent - weighted;
            let threshold = (order[k].0 + order[k + 1].0) / T::lit(2.0);
            let better = match &best {
                None => true,
                Some(b) => {
                    gain > b.gain
                        || (gain == b.gain
                            && (j < b.feature || (j == b.feature && threshold < b.threshold)))
                }
            };
            if better {
                best = Some(SplitChoice {
                    feature: j,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}
