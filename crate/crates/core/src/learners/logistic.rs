//! Batch logistic regression fitted by full-batch gradient ascent.

use serde::{Deserialize, Serialize};

use super::sgd::RunningScaler;
use super::{sigmoid, OfflineModel};
use crate::error::{Error, Result};
use crate::types::{FeatureVector, LabeledSample, Prediction, NUM_FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchLogisticConfig {
    pub learning_rate: f64,
    pub max_iterations: u32,
    /// Stop once the relative change of the log-likelihood falls below this.
    pub tolerance: f64,
}

impl Default for BatchLogisticConfig {
    fn default() -> Self {
        BatchLogisticConfig {
            learning_rate: 0.5,
            max_iterations: 10_000,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLogistic {
    weights: [f64; NUM_FEATURES],
    bias: f64,
    scaler: RunningScaler,
    iterations: u32,
}

impl BatchLogistic {
    pub fn fit(config: &BatchLogisticConfig, data: &[LabeledSample]) -> Result<Self> {
        super::check_both_classes(data)?;
        if config.learning_rate.is_nan()
            || config.learning_rate <= 0.0
            || config.max_iterations == 0
        {
            return Err(Error::InvalidConfig(
                "batch logistic needs a positive learning rate and >= 1 iteration".into(),
            ));
        }
        let mut scaler = RunningScaler::default();
        data.iter().for_each(|s| scaler.update(&s.features));
        let rows: Vec<([f64; NUM_FEATURES], f64)> = data
            .iter()
            .map(|s| (scaler.transform(&s.features), s.label.class_index() as f64))
            .collect();
        let n = rows.len() as f64;

        let mut model = BatchLogistic {
            weights: [0.0; NUM_FEATURES],
            bias: 0.0,
            scaler,
            iterations: 0,
        };
        let mut prev_ll = f64::NEG_INFINITY;
        for it in 1..=config.max_iterations {
            let mut grad = [0.0; NUM_FEATURES];
            let mut grad_bias = 0.0;
            let mut ll = 0.0;
            for (z, y) in &rows {
                let logit = model.logit(z);
                let p = sigmoid(logit);
                // log σ(t) = -ln(1 + e^{-t}), evaluated stably
                ll += if *y > 0.5 {
                    -softplus(-logit)
                } else {
                    -softplus(logit)
                };
                let err = y - p;
                grad_bias += err;
                for (g, v) in grad.iter_mut().zip(z) {
                    *g += err * v;
                }
            }
            model.iterations = it;
            if prev_ll.is_finite() && ((ll - prev_ll) / prev_ll).abs() < config.tolerance {
                break;
            }
            prev_ll = ll;
            model.bias += config.learning_rate * grad_bias / n;
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w += config.learning_rate * g / n;
            }
            if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::Divergence);
            }
        }
        Ok(model)
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    fn logit(&self, z: &[f64; NUM_FEATURES]) -> f64 {
        self.bias + self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl OfflineModel for BatchLogistic {
    fn predict(&self, x: &FeatureVector) -> Prediction {
        Prediction::from_score(sigmoid(self.logit(&self.scaler.transform(x))))
    }
}
