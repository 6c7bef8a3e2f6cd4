//! Loss, reverse-mode gradients, Adam and the epoch loop.

mod tape;

pub use tape::{backward, Tape, TapeOp};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;

/// Probabilities are clamped to this before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Named flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    names: Vec<String>,
}

impl ParamVector {
    pub fn new(model: &Model, values: Vec<f64>) -> Result<Self> {
        if values.len() != model.n_params() {
            return Err(Error::ArityMismatch {
                expected: model.n_params(),
                got: values.len(),
            });
        }
        if let Some(slot) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { slot });
        }
        Ok(ParamVector {
            values,
            names: model.param_names().to_vec(),
        })
    }

    pub fn zeros(model: &Model) -> Self {
        ParamVector {
            values: vec![0.0; model.n_params()],
            names: model.param_names().to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

pub fn cross_entropy(pred: &[f64], label: usize) -> f64 {
    -pred[label].max(PROB_FLOOR).ln()
}

/// `∂ cross_entropy / ∂ pred`; zero where the clamp is active.
pub fn cross_entropy_grad(pred: &[f64], label: usize) -> Vec<f64> {
    let mut g = vec![0.0; pred.len()];
    if pred[label] > PROB_FLOOR {
        g[label] = -1.0 / pred[label];
    }
    g
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        AdamState {
            config,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    let n = state.m.len();
    for len in [params.len(), grads.len()] {
        if len != n {
            return Err(Error::ArityMismatch { expected: n, got: len });
        }
    }
    if let Some(slot) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { slot });
    }
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for i in 0..n {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// A preprocessed input tensor with its class.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub label: usize,
}

/// Aggregate metrics over a pass through a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub loss: f64,
    pub accuracy: f64,
    /// Samples that could not be encoded (all-zero input).
    pub skipped: usize,
    /// Samples whose readout mass vanished.
    pub degenerate: usize,
}

#[derive(Default)]
struct Tally {
    loss: f64,
    correct: usize,
    seen: usize,
    skipped: usize,
    degenerate: usize,
}

impl Tally {
    fn finish(self) -> EpochMetrics {
        let n = self.seen.max(1) as f64;
        EpochMetrics {
            loss: self.loss / n,
            accuracy: self.correct as f64 / n,
            skipped: self.skipped,
            degenerate: self.degenerate,
        }
    }
}

/// One shuffled pass of mini-batch Adam. Batch gradients are averaged in
/// sample order so the result depends only on the RNG state.
pub fn train_epoch<R: Rng + ?Sized>(
    model: &Model,
    data: &[Sample],
    batch_size: usize,
    params: &mut [f64],
    adam: &mut AdamState,
    rng: &mut R,
) -> Result<EpochMetrics> {
    if data.is_empty() {
        return Err(Error::Dataset("empty training set".into()));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let mut tally = Tally::default();
    let mut grad = vec![0.0; params.len()];
    for batch in order.chunks(batch_size.max(1)) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut used = 0usize;
        for &i in batch {
            let s = &data[i];
            let (loss, readout, g) = match model.loss_and_grad(&s.x, s.label, params) {
                Ok(r) => r,
                Err(Error::ZeroNorm) => {
                    tally.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss);
            }
            tally.loss += loss;
            tally.seen += 1;
            tally.degenerate += readout.degenerate as usize;
            tally.correct += (argmax(&readout.probs) == s.label) as usize;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
            used += 1;
        }
        if used == 0 {
            continue;
        }
        let inv = 1.0 / used as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        adam_step(params, &grad, adam)?;
    }
    Ok(tally.finish())
}

/// Mean loss and accuracy without updating anything.
pub fn evaluate(model: &Model, data: &[Sample], params: &[f64]) -> Result<EpochMetrics> {
    let mut tally = Tally::default();
    for s in data {
        let r = match model.predict(&s.x, params) {
            Ok(r) => r,
            Err(Error::ZeroNorm) => {
                tally.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let loss = cross_entropy(&r.probs, s.label);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        tally.loss += loss;
        tally.seen += 1;
        tally.degenerate += r.degenerate as usize;
        tally.correct += (argmax(&r.probs) == s.label) as usize;
    }
    Ok(tally.finish())
}
