//! 3-10-1 network: tanh hidden layer, sigmoid output, binary cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logreg::sigmoid;
use super::{check_training_set, TrainConfig, TrainingReport};
use crate::error::{Error, Result};

pub const HIDDEN_UNITS: usize = 10;
const N_PARAMS: usize = HIDDEN_UNITS * 3 + HIDDEN_UNITS + HIDDEN_UNITS + 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub hidden_weights: [[f64; 3]; HIDDEN_UNITS],
    pub hidden_biases: [f64; HIDDEN_UNITS],
    pub output_weights: [f64; HIDDEN_UNITS],
    pub output_bias: f64,
}

impl MlpModel {
    /// Uniform on `+-1/sqrt(fan_in)` for weights, zero biases.
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let b1 = 1.0 / 3f64.sqrt();
        let b2 = 1.0 / (HIDDEN_UNITS as f64).sqrt();
        let mut m = MlpModel::zeros();
        for row in m.hidden_weights.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.random_range(-b1..b1);
            }
        }
        for w in m.output_weights.iter_mut() {
            *w = rng.random_range(-b2..b2);
        }
        m
    }

    fn zeros() -> Self {
        MlpModel {
            hidden_weights: [[0.0; 3]; HIDDEN_UNITS],
            hidden_biases: [0.0; HIDDEN_UNITS],
            output_weights: [0.0; HIDDEN_UNITS],
            output_bias: 0.0,
        }
    }

    // self -= step * g
    fn descend(&mut self, step: f64, g: &MlpModel) {
        for i in 0..HIDDEN_UNITS {
            for j in 0..3 {
                self.hidden_weights[i][j] -= step * g.hidden_weights[i][j];
            }
            self.hidden_biases[i] -= step * g.hidden_biases[i];
            self.output_weights[i] -= step * g.output_weights[i];
        }
        self.output_bias -= step * g.output_bias;
    }

    fn hidden(&self, x: &[f64; 3]) -> [f64; HIDDEN_UNITS] {
        std::array::from_fn(|i| {
            let w = &self.hidden_weights[i];
            (self.hidden_biases[i] + w[0] * x[0] + w[1] * x[1] + w[2] * x[2]).tanh()
        })
    }

    pub fn logit(&self, x: &[f64; 3]) -> f64 {
        let h = self.hidden(x);
        self.output_bias + h.iter().zip(&self.output_weights).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Mean binary cross-entropy.
    pub fn loss(&self, x: &[[f64; 3]], y: &[u8]) -> f64 {
        let total: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, &yi)| {
                let z = self.logit(xi);
                // -log sigmoid(+-z)
                let t = if yi == 1 { z } else { -z };
                if t > 0.0 {
                    (-t).exp().ln_1p()
                } else {
                    -t + t.exp().ln_1p()
                }
            })
            .sum();
        total / x.len() as f64
    }

    /// Gradient of [`MlpModel::loss`] in [`MlpModel::to_params`] order.
    pub fn gradient(&self, x: &[[f64; 3]], y: &[u8]) -> Vec<f64> {
        let mut g = MlpModel::zeros();
        self.accumulate_gradient(x.iter().zip(y), &mut g);
        let scale = 1.0 / x.len() as f64;
        g.to_params().into_iter().map(|v| v * scale).collect()
    }

    fn accumulate_gradient<'a>(&self, rows: impl Iterator<Item = (&'a [f64; 3], &'a u8)>, g: &mut MlpModel) {
        for (xi, &yi) in rows {
            let h = self.hidden(xi);
            let z = self.output_bias + h.iter().zip(&self.output_weights).map(|(a, b)| a * b).sum::<f64>();
            let dz = sigmoid(z) - f64::from(yi);
            g.output_bias += dz;
            for (i, &hi) in h.iter().enumerate() {
                g.output_weights[i] += dz * hi;
                let da = dz * self.output_weights[i] * (1.0 - hi * hi);
                g.hidden_biases[i] += da;
                for (gw, &xj) in g.hidden_weights[i].iter_mut().zip(xi) {
                    *gw += da * xj;
                }
            }
        }
    }

    /// Flatten as hidden weights (row-major), hidden biases, output weights,
    /// output bias.
    pub fn to_params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(N_PARAMS);
        p.extend(self.hidden_weights.iter().flatten());
        p.extend(self.hidden_biases);
        p.extend(self.output_weights);
        p.push(self.output_bias);
        p
    }

    pub fn from_params(p: &[f64]) -> Result<Self> {
        if p.len() != N_PARAMS {
            return Err(Error::LengthMismatch { left: p.len(), right: N_PARAMS });
        }
        let mut m = MlpModel {
            hidden_weights: [[0.0; 3]; HIDDEN_UNITS],
            hidden_biases: [0.0; HIDDEN_UNITS],
            output_weights: [0.0; HIDDEN_UNITS],
            output_bias: p[N_PARAMS - 1],
        };
        for i in 0..HIDDEN_UNITS {
            m.hidden_weights[i].copy_from_slice(&p[3 * i..3 * i + 3]);
            m.hidden_biases[i] = p[3 * HIDDEN_UNITS + i];
            m.output_weights[i] = p[4 * HIDDEN_UNITS + i];
        }
        Ok(m)
    }
}

/// Mini-batch gradient descent; returns the epoch with the lowest
/// validation loss.
pub fn train_mlp(x: &[[f64; 3]], y: &[u8], config: &TrainConfig, seed: u64) -> Result<(MlpModel, TrainingReport)> {
    check_training_set(x, y)?;
    if config.nn_batch_size == 0 {
        return Err(Error::InvalidArgument("nn_batch_size must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&config.nn_validation_fraction) {
        return Err(Error::InvalidArgument("nn_validation_fraction must be in [0,1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((x.len() as f64 * config.nn_validation_fraction).round() as usize).min(x.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    // no held-out rows: select on training loss
    let sel_idx: Vec<usize> = if n_val > 0 { val_idx.to_vec() } else { train_idx.clone() };
    let sel_x: Vec<[f64; 3]> = sel_idx.iter().map(|&i| x[i]).collect();
    let sel_y: Vec<u8> = sel_idx.iter().map(|&i| y[i]).collect();

    let mut model = MlpModel::init(&mut rng);
    let mut best = model.clone();
    let mut best_loss = model.loss(&sel_x, &sel_y);
    let mut history = vec![best_loss];

    for _ in 0..config.nn_epochs {
        train_idx.shuffle(&mut rng);
        for batch in train_idx.chunks(config.nn_batch_size) {
            let mut g = MlpModel::zeros();
            model.accumulate_gradient(batch.iter().map(|&i| (&x[i], &y[i])), &mut g);
            model.descend(config.nn_learning_rate / batch.len() as f64, &g);
        }
        let l = model.loss(&sel_x, &sel_y);
        history.push(l);
        if l < best_loss {
            best_loss = l;
            best = model.clone();
        }
    }
    if !best.to_params().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("network parameters"));
    }
    Ok((best, TrainingReport { iterations: config.nn_epochs, converged: true, objective: best_loss, history }))
}
