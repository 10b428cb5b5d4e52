//! CART-style decision tree classifier.
//!
//! Splits minimize weighted Gini impurity (or entropy); all ties — equal
//! impurity decrease, equal votes at a leaf — resolve to the lowest feature,
//! threshold or class index so training is deterministic.

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::Real;

use super::{argmax_tie_lowest, TreeParams};

/// Node impurity measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Gini,
    Entropy,
}

impl SplitCriterion {
    fn impurity(self, counts: &[f64], total: f64) -> f64 {
        if total <= 0.0 {
            return 0.0;
        }
        match self {
            SplitCriterion::Gini => {
                1.0 - counts
                    .iter()
                    .map(|c| (c / total) * (c / total))
                    .sum::<f64>()
            }
            SplitCriterion::Entropy => counts
                .iter()
                .filter(|&&c| c > 0.0)
                .map(|&c| {
                    let p = c / total;
                    -p * p.log2()
                })
                .sum(),
        }
    }
}

/// One node of a built tree; children are indices into the node arena.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode<R> {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: R,
        left: usize,
        right: usize,
    },
}

/// A built decision tree. Rows go left when `value <= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel<R> {
    nodes: Vec<TreeNode<R>>,
    n_features: usize,
}

impl<R: Real> TreeModel<R> {
    pub fn nodes(&self) -> &[TreeNode<R>] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub(super) fn from_nodes(nodes: Vec<TreeNode<R>>, n_features: usize) -> Result<TreeModel<R>> {
        if nodes.is_empty() {
            return Err(Error::Config("tree must have at least one node".into()));
        }
        Ok(TreeModel { nodes, n_features })
    }

    pub fn predict_row(&self, row: &[R]) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { class } => return *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

/// Feature subset policy for one split.
pub(super) enum FeatureSampling<'a> {
    /// Consider every feature (plain decision tree).
    All,
    /// Draw `m` distinct features per split (random forest).
    Random { m: usize, rng: &'a mut ChaCha8Rng },
}

struct Builder<'a, R> {
    x: &'a FeatureMatrix<R>,
    y: &'a [usize],
    n_classes: usize,
    class_weights: &'a [f64],
    params: &'a TreeParams,
    nodes: Vec<TreeNode<R>>,
}

struct BestSplit<R> {
    feature: usize,
    threshold: R,
    gain: f64,
}

impl<'a, R: Real> Builder<'a, R> {
    fn weighted_counts(&self, rows: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.n_classes];
        for &r in rows {
            counts[self.y[r]] += self.class_weights[self.y[r]];
        }
        counts
    }

    fn majority(&self, counts: &[f64]) -> usize {
        argmax_tie_lowest(counts)
    }

    /// Best split of `rows` over `features`, if any split has positive gain.
    /// Features must be in ascending order so ties pick the lowest index.
    fn best_split(&self, rows: &[usize], features: &[usize]) -> Option<BestSplit<R>> {
        let counts = self.weighted_counts(rows);
        let total: f64 = counts.iter().sum();
        let parent_impurity = self.params.criterion.impurity(&counts, total);
        let mut best: Option<BestSplit<R>> = None;

        let mut sorted: Vec<(R, usize)> = Vec::with_capacity(rows.len());
        for &f in features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x.value(r, f), self.y[r])));
            sorted.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let mut left = vec![0.0; self.n_classes];
            let mut left_total = 0.0;
            for i in 1..sorted.len() {
                let (prev_v, prev_c) = sorted[i - 1];
                left[prev_c] += self.class_weights[prev_c];
                left_total += self.class_weights[prev_c];
                let v = sorted[i].0;
                if v == prev_v {
                    continue;
                }
                let right_total = total - left_total;
                let mut right = counts.clone();
                for (r, l) in right.iter_mut().zip(left.iter()) {
                    *r -= l;
                }
                let weighted = (left_total / total)
                    * self.params.criterion.impurity(&left, left_total)
                    + (right_total / total) * self.params.criterion.impurity(&right, right_total);
                let gain = parent_impurity - weighted;
                if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let two = R::from_f64_lossy(2.0);
                    best = Some(BestSplit {
                        feature: f,
                        threshold: (prev_v + v) / two,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &[usize], depth: usize, sampling: &mut FeatureSampling) -> usize {
        let counts = self.weighted_counts(rows);
        let n_present = counts.iter().filter(|&&c| c > 0.0).count();
        let stop = depth >= self.params.max_depth
            || rows.len() < self.params.min_samples_split
            || n_present <= 1;
        if !stop {
            let features: Vec<usize> = match sampling {
                FeatureSampling::All => (0..self.x.n_cols()).collect(),
                FeatureSampling::Random { m, rng } => {
                    let mut all: Vec<usize> = (0..self.x.n_cols()).collect();
                    all.shuffle(rng);
                    let mut picked: Vec<usize> =
                        all.into_iter().take((*m).min(self.x.n_cols())).collect();
                    picked.sort_unstable();
                    picked
                }
            };
            if let Some(split) = self.best_split(rows, &features) {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&r| self.x.value(r, split.feature) <= split.threshold);
                // Thresholds sit between distinct values, so both sides are
                // non-empty.
                let idx = self.nodes.len();
                self.nodes.push(TreeNode::Leaf { class: 0 }); // placeholder
                let left = self.grow(&left_rows, depth + 1, sampling);
                let right = self.grow(&right_rows, depth + 1, sampling);
                self.nodes[idx] = TreeNode::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left,
                    right,
                };
                return idx;
            }
        }
        let idx = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            class: self.majority(&counts),
        });
        idx
    }
}

pub(super) fn build<R: Real>(
    x: &FeatureMatrix<R>,
    y: &[usize],
    rows: &[usize],
    n_classes: usize,
    class_weights: &[f64],
    params: &TreeParams,
    sampling: &mut FeatureSampling,
) -> TreeModel<R> {
    let mut builder = Builder {
        x,
        y,
        n_classes,
        class_weights,
        params,
        nodes: Vec::new(),
    };
    builder.grow(rows, 0, sampling);
    TreeModel {
        nodes: builder.nodes,
        n_features: x.n_cols(),
    }
}

pub(super) fn train<R: Real>(
    x: &FeatureMatrix<R>,
    y: &[usize],
    n_classes: usize,
    class_weights: &[f64],
    params: &TreeParams,
) -> TreeModel<R> {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    build(
        x,
        y,
        &rows,
        n_classes,
        class_weights,
        params,
        &mut FeatureSampling::All,
    )
}
