//! Feed-forward network with softmax output, trained by mini-batch gradient
//! descent on the cross-entropy loss. Weight init and batch shuffling both
//! come from the training seed.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::util::{rng, standard_normal};
use crate::Real;

use super::linear::softmax_in_place;
use super::{argmax_tie_lowest, NeuralParams};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply<R: Real>(self, v: R) -> R {
        match self {
            Activation::Relu => v.max(R::zero()),
            Activation::Tanh => v.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output<R: Real>(self, out: R) -> R {
        match self {
            Activation::Relu => {
                if out > R::zero() {
                    R::one()
                } else {
                    R::zero()
                }
            }
            Activation::Tanh => R::one() - out * out,
        }
    }
}

/// Layer sizes `[input, hidden..., classes]` plus the flat parameter vector:
/// for each layer, a row-major `(in, out)` weight matrix followed by `out`
/// biases.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel<R> {
    dims: Vec<usize>,
    activation: Activation,
    weights: Vec<R>,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl<R: Real> NeuralModel<R> {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[R] {
        &self.weights
    }

    pub(super) fn from_parts(
        dims: Vec<usize>,
        activation: Activation,
        weights: Vec<R>,
    ) -> Result<NeuralModel<R>> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("bad layer dims {dims:?}")));
        }
        if weights.len() != param_count(&dims) {
            return Err(Error::Config(format!(
                "neural weights length {} does not match dims {dims:?}",
                weights.len()
            )));
        }
        Ok(NeuralModel {
            dims,
            activation,
            weights,
        })
    }

    /// Forward pass returning the activations of every layer (input first,
    /// logits last).
    fn forward(&self, row: &[R]) -> Vec<Vec<R>> {
        forward(&self.dims, self.activation, &self.weights, row)
    }

    pub fn logits(&self, row: &[R]) -> Vec<R> {
        self.forward(row).pop().unwrap()
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

fn layer_offsets(dims: &[usize]) -> Vec<(usize, usize)> {
    // (weight offset, bias offset) per layer.
    let mut offsets = Vec::with_capacity(dims.len() - 1);
    let mut pos = 0;
    for w in dims.windows(2) {
        offsets.push((pos, pos + w[0] * w[1]));
        pos += w[0] * w[1] + w[1];
    }
    offsets
}

fn forward<R: Real>(
    dims: &[usize],
    activation: Activation,
    weights: &[R],
    row: &[R],
) -> Vec<Vec<R>> {
    let offsets = layer_offsets(dims);
    let n_layers = dims.len() - 1;
    let mut acts: Vec<Vec<R>> = Vec::with_capacity(dims.len());
    acts.push(row.to_vec());
    for l in 0..n_layers {
        let (w_off, b_off) = offsets[l];
        let (n_in, n_out) = (dims[l], dims[l + 1]);
        let mut out: Vec<R> = weights[b_off..b_off + n_out].to_vec();
        let input = &acts[l];
        for j in 0..n_in {
            let xj = input[j];
            if xj == R::zero() {
                continue;
            }
            let wr = &weights[w_off + j * n_out..w_off + (j + 1) * n_out];
            for (o, &w) in out.iter_mut().zip(wr) {
                *o = *o + xj * w;
            }
        }
        if l + 1 < n_layers {
            for o in out.iter_mut() {
                *o = activation.apply(*o);
            }
        }
        acts.push(out);
    }
    acts
}

/// The training objective: mean class-weighted softmax cross-entropy of the
/// network over a row subset, evaluated at an arbitrary flat parameter
/// vector. Exposes analytic gradients for the trainer and for
/// finite-difference checks.
pub struct MlpObjective<'a, R> {
    x: &'a FeatureMatrix<R>,
    y: &'a [usize],
    dims: Vec<usize>,
    activation: Activation,
    class_weights: &'a [f64],
}

impl<'a, R: Real> MlpObjective<'a, R> {
    pub fn new(
        x: &'a FeatureMatrix<R>,
        y: &'a [usize],
        hidden: &[usize],
        n_classes: usize,
        activation: Activation,
        class_weights: &'a [f64],
    ) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(x.n_cols());
        dims.extend_from_slice(hidden);
        dims.push(n_classes);
        Self {
            x,
            y,
            dims,
            activation,
            class_weights,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_params(&self) -> usize {
        param_count(&self.dims)
    }

    fn batch_weight(&self, rows: &[usize]) -> f64 {
        rows.iter().map(|&i| self.class_weights[self.y[i]]).sum()
    }

    pub fn loss(&self, w: &[R], rows: &[usize]) -> R {
        let mut total = R::zero();
        for &i in rows {
            let logits = forward(&self.dims, self.activation, w, self.x.row(i))
                .pop()
                .unwrap();
            let max = logits.iter().copied().fold(R::neg_infinity(), R::max);
            let logsum = logits
                .iter()
                .map(|&l| (l - max).exp())
                .fold(R::zero(), |a, b| a + b)
                .ln()
                + max;
            let wi = R::from_f64_lossy(self.class_weights[self.y[i]]);
            total = total + wi * (logsum - logits[self.y[i]]);
        }
        total / R::from_f64_lossy(self.batch_weight(rows))
    }

    pub fn grad(&self, w: &[R], rows: &[usize]) -> Vec<R> {
        let offsets = layer_offsets(&self.dims);
        let n_layers = self.dims.len() - 1;
        let mut g = vec![R::zero(); w.len()];
        for &i in rows {
            let acts = forward(&self.dims, self.activation, w, self.x.row(i));
            let wi = R::from_f64_lossy(self.class_weights[self.y[i]]);
            // Output delta: softmax - one_hot(y).
            let mut delta: Vec<R> = acts[n_layers].clone();
            softmax_in_place(&mut delta);
            delta[self.y[i]] = delta[self.y[i]] - R::one();
            for d in delta.iter_mut() {
                *d = *d * wi;
            }
            for l in (0..n_layers).rev() {
                let (w_off, b_off) = offsets[l];
                let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
                let input = &acts[l];
                for j in 0..n_in {
                    let xj = input[j];
                    if xj != R::zero() {
                        let gr = &mut g[w_off + j * n_out..w_off + (j + 1) * n_out];
                        for (gv, &dv) in gr.iter_mut().zip(&delta) {
                            *gv = *gv + xj * dv;
                        }
                    }
                }
                let gb = &mut g[b_off..b_off + n_out];
                for (gv, &dv) in gb.iter_mut().zip(&delta) {
                    *gv = *gv + dv;
                }
                if l > 0 {
                    let mut prev = vec![R::zero(); n_in];
                    for (j, p) in prev.iter_mut().enumerate() {
                        let wr = &w[w_off + j * n_out..w_off + (j + 1) * n_out];
                        let mut s = R::zero();
                        for (&wv, &dv) in wr.iter().zip(&delta) {
                            s = s + wv * dv;
                        }
                        *p = s * self.activation.derivative_from_output(input[j]);
                    }
                    delta = prev;
                }
            }
        }
        let norm = R::from_f64_lossy(self.batch_weight(rows));
        for gv in g.iter_mut() {
            *gv = *gv / norm;
        }
        g
    }

    /// Seeded init: normal weights scaled per fan-in, zero biases.
    pub fn init_weights(&self, seed: u64) -> Vec<R> {
        let mut r = rng(seed);
        let mut w = vec![R::zero(); self.n_params()];
        let offsets = layer_offsets(&self.dims);
        for (l, (w_off, b_off)) in offsets.iter().enumerate() {
            let n_in = self.dims[l];
            let scale = match self.activation {
                Activation::Relu => (2.0 / n_in as f64).sqrt(),
                Activation::Tanh => (1.0 / n_in as f64).sqrt(),
            };
            for slot in w.iter_mut().take(*b_off).skip(*w_off) {
                *slot = R::from_f64_lossy(standard_normal(&mut r) * scale);
            }
        }
        w
    }
}

pub(super) fn train<R: Real>(
    x: &FeatureMatrix<R>,
    y: &[usize],
    n_classes: usize,
    class_weights: &[f64],
    params: &NeuralParams,
    seed: u64,
) -> NeuralModel<R> {
    let objective = MlpObjective::new(
        x,
        y,
        &params.hidden_widths,
        n_classes,
        params.activation,
        class_weights,
    );
    let mut w = objective.init_weights(seed);
    let lr = R::from_f64_lossy(params.learning_rate);
    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    let mut shuffle_rng = rng(crate::util::derive_seed(seed, 0xba7c4));
    for _ in 0..params.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(params.batch_size) {
            let g = objective.grad(&w, batch);
            for (wv, gv) in w.iter_mut().zip(g) {
                *wv = *wv - lr * gv;
            }
        }
    }
    NeuralModel {
        dims: objective.dims,
        activation: params.activation,
        weights: w,
    }
}
