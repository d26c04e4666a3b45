//! Online logistic regression trained by gradient ascent on each chunk.

use serde::{Deserialize, Serialize};

use super::{sigmoid, OnlineClassifier};
use crate::error::{Error, Result};
use crate::types::{FeatureVector, LabeledSample, Prediction, NUM_FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdLogisticConfig {
    pub learning_rate: f64,
    /// Full gradient-ascent passes over every chunk.
    pub iterations_per_chunk: u32,
    /// Standardize features with running mean/variance before the dot product.
    pub standardize: bool,
}

impl Default for SgdLogisticConfig {
    fn default() -> Self {
        SgdLogisticConfig {
            learning_rate: 0.01,
            iterations_per_chunk: 100,
            standardize: true,
        }
    }
}

/// Running per-feature mean and variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct RunningScaler {
    count: f64,
    mean: [f64; NUM_FEATURES],
    m2: [f64; NUM_FEATURES],
}

impl Default for RunningScaler {
    fn default() -> Self {
        RunningScaler {
            count: 0.0,
            mean: [0.0; NUM_FEATURES],
            m2: [0.0; NUM_FEATURES],
        }
    }
}

impl RunningScaler {
    pub(crate) fn update(&mut self, x: &FeatureVector) {
        self.count += 1.0;
        for (i, &v) in x.values().iter().enumerate() {
            let d = v - self.mean[i];
            self.mean[i] += d / self.count;
            self.m2[i] += d * (v - self.mean[i]);
        }
    }

    pub(crate) fn transform(&self, x: &FeatureVector) -> [f64; NUM_FEATURES] {
        let mut out = *x.values();
        if self.count == 0.0 {
            return out;
        }
        for (i, v) in out.iter_mut().enumerate() {
            let var = if self.count > 1.0 {
                self.m2[i] / (self.count - 1.0)
            } else {
                0.0
            };
            let sd = var.sqrt();
            *v -= self.mean[i];
            if sd > 1e-12 {
                *v /= sd;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdLogistic {
    config: SgdLogisticConfig,
    weights: [f64; NUM_FEATURES],
    bias: f64,
    scaler: RunningScaler,
}

impl SgdLogistic {
    pub fn new(config: SgdLogisticConfig) -> Result<Self> {
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                config.learning_rate
            )));
        }
        if config.iterations_per_chunk == 0 {
            return Err(Error::InvalidConfig(
                "iterations_per_chunk must be >= 1".into(),
            ));
        }
        Ok(SgdLogistic {
            config,
            weights: [0.0; NUM_FEATURES],
            bias: 0.0,
            scaler: RunningScaler::default(),
        })
    }

    pub fn weights(&self) -> (&[f64; NUM_FEATURES], f64) {
        (&self.weights, self.bias)
    }

    fn inputs(&self, x: &FeatureVector) -> [f64; NUM_FEATURES] {
        if self.config.standardize {
            self.scaler.transform(x)
        } else {
            *x.values()
        }
    }

    fn logit(&self, z: &[f64; NUM_FEATURES]) -> f64 {
        self.bias + self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
    }
}

impl OnlineClassifier for SgdLogistic {
    fn name(&self) -> &'static str {
        "sgd_logistic"
    }

    fn predict(&self, x: &FeatureVector) -> Prediction {
        Prediction::from_score(sigmoid(self.logit(&self.inputs(x))))
    }

    fn learn(&mut self, sample: &LabeledSample) -> Result<()> {
        self.learn_chunk(std::slice::from_ref(sample))
    }

    fn learn_chunk(&mut self, chunk: &[LabeledSample]) -> Result<()> {
        if chunk.is_empty() {
            return Ok(());
        }
        let backup = (self.weights, self.bias, self.scaler.clone());
        if self.config.standardize {
            for s in chunk {
                self.scaler.update(&s.features);
            }
        }
        let inputs: Vec<([f64; NUM_FEATURES], f64)> = chunk
            .iter()
            .map(|s| (self.inputs(&s.features), s.label.class_index() as f64))
            .collect();
        let n = chunk.len() as f64;
        let lr = self.config.learning_rate;
        for _ in 0..self.config.iterations_per_chunk {
            let mut grad = [0.0; NUM_FEATURES];
            let mut grad_bias = 0.0;
            for (z, y) in &inputs {
                let err = y - sigmoid(self.logit(z));
                grad_bias += err;
                for (g, v) in grad.iter_mut().zip(z) {
                    *g += err * v;
                }
            }
            if !grad_bias.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                (self.weights, self.bias, self.scaler) = backup;
                return Err(Error::Divergence);
            }
            self.bias += lr * grad_bias / n;
            for (w, g) in self.weights.iter_mut().zip(&grad) {
                *w += lr * g / n;
            }
        }
        if !self.bias.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
            (self.weights, self.bias, self.scaler) = backup;
            return Err(Error::Divergence);
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.weights = [0.0; NUM_FEATURES];
        self.bias = 0.0;
        self.scaler = RunningScaler::default();
    }
}
