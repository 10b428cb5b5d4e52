//! Multinomial logistic regression trained by full-batch gradient descent
//! on the softmax cross-entropy with L2 regularization (bias excluded).

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::Real;

use super::{argmax_tie_lowest, LinearParams};

/// Weight matrix of shape `(d + 1, k)`: one row per feature plus a bias row,
/// one column per class. Stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<R> {
    weights: Vec<R>,
    n_features: usize,
    n_classes: usize,
}

/// Numerically stable in-place softmax.
pub(super) fn softmax_in_place<R: Real>(logits: &mut [R]) {
    let max = logits.iter().copied().fold(R::neg_infinity(), R::max);
    let mut sum = R::zero();
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum = sum + *l;
    }
    for l in logits.iter_mut() {
        *l = *l / sum;
    }
}

impl<R: Real> LinearModel<R> {
    pub fn shape(&self) -> [usize; 2] {
        [self.n_features + 1, self.n_classes]
    }

    pub fn weights(&self) -> &[R] {
        &self.weights
    }

    pub(super) fn from_parts(shape: [usize; 2], weights: Vec<R>) -> Result<LinearModel<R>> {
        if shape[0] == 0 || shape[1] == 0 || weights.len() != shape[0] * shape[1] {
            return Err(Error::Config(format!(
                "linear weights length {} does not match shape {:?}",
                weights.len(),
                shape
            )));
        }
        Ok(LinearModel {
            weights,
            n_features: shape[0] - 1,
            n_classes: shape[1],
        })
    }

    fn logits(&self, row: &[R]) -> Vec<R> {
        let k = self.n_classes;
        // Start from the bias row.
        let mut out: Vec<R> = self.weights[self.n_features * k..].to_vec();
        for (j, &x) in row.iter().enumerate() {
            let w = &self.weights[j * k..(j + 1) * k];
            for (o, &wjk) in out.iter_mut().zip(w) {
                *o = *o + x * wjk;
            }
        }
        out
    }

    pub fn predict_row(&self, row: &[R]) -> usize {
        argmax_tie_lowest(&self.logits(row))
    }

    pub fn proba_row(&self, row: &[R]) -> Vec<R> {
        let mut l = self.logits(row);
        softmax_in_place(&mut l);
        l
    }
}

/// The training objective: mean class-weighted softmax cross-entropy over
/// the rows of a matrix plus an L2 penalty on the non-bias weights.
///
/// `loss` and `grad` evaluate at an arbitrary flat parameter vector, which
/// is what both the trainer and finite-difference checks need.
pub struct SoftmaxObjective<'a, R> {
    x: &'a FeatureMatrix<R>,
    y: &'a [usize],
    n_classes: usize,
    class_weights: &'a [f64],
    l2: f64,
}

impl<'a, R: Real> SoftmaxObjective<'a, R> {
    pub fn new(
        x: &'a FeatureMatrix<R>,
        y: &'a [usize],
        n_classes: usize,
        class_weights: &'a [f64],
        l2: f64,
    ) -> Self {
        Self {
            x,
            y,
            n_classes,
            class_weights,
            l2,
        }
    }

    pub fn n_params(&self) -> usize {
        (self.x.n_cols() + 1) * self.n_classes
    }

    fn weight_sum(&self) -> f64 {
        self.y.iter().map(|&c| self.class_weights[c]).sum()
    }

    fn model(&self, w: &[R]) -> LinearModel<R> {
        LinearModel {
            weights: w.to_vec(),
            n_features: self.x.n_cols(),
            n_classes: self.n_classes,
        }
    }

    pub fn loss(&self, w: &[R]) -> R {
        let model = self.model(w);
        let mut nll = R::zero();
        for (i, row) in self.x.rows().enumerate() {
            let logits = model.logits(row);
            let max = logits.iter().copied().fold(R::neg_infinity(), R::max);
            let logsum = logits
                .iter()
                .map(|&l| (l - max).exp())
                .fold(R::zero(), |a, b| a + b)
                .ln()
                + max;
            let sample = logsum - logits[self.y[i]];
            nll = nll + R::from_f64_lossy(self.class_weights[self.y[i]]) * sample;
        }
        let norm = R::from_f64_lossy(self.weight_sum());
        let mut penalty = R::zero();
        let k = self.n_classes;
        for &wj in &w[..self.x.n_cols() * k] {
            penalty = penalty + wj * wj;
        }
        nll / norm + R::from_f64_lossy(self.l2 / 2.0) * penalty
    }

    pub fn grad(&self, w: &[R]) -> Vec<R> {
        let model = self.model(w);
        let k = self.n_classes;
        let d = self.x.n_cols();
        let mut g = vec![R::zero(); (d + 1) * k];
        for (i, row) in self.x.rows().enumerate() {
            let mut p = model.logits(row);
            softmax_in_place(&mut p);
            let wi = R::from_f64_lossy(self.class_weights[self.y[i]]);
            p[self.y[i]] = p[self.y[i]] - R::one();
            for (j, &x) in row.iter().enumerate() {
                let gj = &mut g[j * k..(j + 1) * k];
                for (gv, &pv) in gj.iter_mut().zip(&p) {
                    *gv = *gv + wi * x * pv;
                }
            }
            let bias = &mut g[d * k..];
            for (gv, &pv) in bias.iter_mut().zip(&p) {
                *gv = *gv + wi * pv;
            }
        }
        let norm = R::from_f64_lossy(self.weight_sum());
        let l2 = R::from_f64_lossy(self.l2);
        for (idx, gv) in g.iter_mut().enumerate() {
            *gv = *gv / norm;
            if idx < d * k {
                *gv = *gv + l2 * w[idx];
            }
        }
        g
    }
}

pub(super) fn train<R: Real>(
    x: &FeatureMatrix<R>,
    y: &[usize],
    n_classes: usize,
    class_weights: &[f64],
    params: &LinearParams,
) -> LinearModel<R> {
    let objective = SoftmaxObjective::new(x, y, n_classes, class_weights, params.l2);
    let mut w = vec![R::zero(); objective.n_params()];
    let lr = R::from_f64_lossy(params.learning_rate);
    for _ in 0..params.epochs {
        let g = objective.grad(&w);
        for (wv, gv) in w.iter_mut().zip(g) {
            *wv = *wv - lr * gv;
        }
    }
    LinearModel {
        weights: w,
        n_features: x.n_cols(),
        n_classes,
    }
}
