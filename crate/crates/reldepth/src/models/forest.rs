//! Random forest: bagged decision trees with per-split feature subsampling
//! and majority voting.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::util::{derive_seed, rng};
use crate::Real;

use super::tree::{self, FeatureSampling, TreeModel};
use super::{argmax_tie_lowest, ForestParams, TreeParams};

/// A trained forest. Prediction is the modal vote of the trees, lowest class
/// index on ties.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel<R> {
    trees: Vec<TreeModel<R>>,
    n_classes: usize,
}

impl<R: Real> ForestModel<R> {
    pub fn trees(&self) -> &[TreeModel<R>] {
        &self.trees
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub(super) fn from_trees(trees: Vec<TreeModel<R>>, n_classes: usize) -> Result<ForestModel<R>> {
        if trees.is_empty() {
            return Err(Error::Config("forest must have at least one tree".into()));
        }
        Ok(ForestModel { trees, n_classes })
    }

    pub fn votes(&self, row: &[R]) -> Vec<usize> {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict_row(row)] += 1;
        }
        votes
    }

    pub fn predict_row(&self, row: &[R]) -> usize {
        argmax_tie_lowest(&self.votes(row))
    }

    /// Vote fractions as a probability row.
    pub fn proba_row(&self, row: &[R]) -> Vec<R> {
        let n = R::from_usize(self.trees.len()).unwrap();
        self.votes(row)
            .into_iter()
            .map(|v| R::from_usize(v).unwrap() / n)
            .collect()
    }
}

pub(super) fn train<R: Real>(
    x: &FeatureMatrix<R>,
    y: &[usize],
    n_classes: usize,
    class_weights: &[f64],
    tree_params: &TreeParams,
    params: &ForestParams,
    seed: u64,
) -> ForestModel<R> {
    let d = x.n_cols();
    let m = params
        .features_per_split
        .unwrap_or_else(|| ((d as f64).sqrt().round() as usize).max(1))
        .min(d.max(1));
    // Sub-seeds are derived up front so parallel tree training is
    // deterministic regardless of scheduling.
    let seeds: Vec<u64> = (0..params.n_trees)
        .map(|t| derive_seed(seed, t as u64 + 1))
        .collect();
    let trees: Vec<TreeModel<R>> = seeds
        .par_iter()
        .map(|&tree_seed| {
            let mut r = rng(tree_seed);
            let rows: Vec<usize> = if params.bootstrap {
                (0..x.n_rows())
                    .map(|_| r.gen_range(0..x.n_rows()))
                    .collect()
            } else {
                (0..x.n_rows()).collect()
            };
            let mut sampling = FeatureSampling::Random { m, rng: &mut r };
            tree::build(
                x,
                y,
                &rows,
                n_classes,
                class_weights,
                tree_params,
                &mut sampling,
            )
        })
        .collect();
    ForestModel { trees, n_classes }
}
