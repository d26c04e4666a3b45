//! Online Accuracy Updated Ensemble.
//!
//! Every member is trained on every sample. At the end of each block of
//! `block_size` samples a candidate tree trained on that block joins the
//! ensemble, and all members are re-weighted by their squared error on the
//! block relative to a random classifier's error. When the ensemble is
//! full, the lowest-weight member is evicted.

use serde::{Deserialize, Serialize};

use super::hoeffding::{HoeffdingTree, HoeffdingTreeConfig};
use super::OnlineClassifier;
use crate::error::{Error, Result};
use crate::types::{FeatureVector, LabeledSample, Prediction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OaueConfig {
    pub max_members: usize,
    /// Samples per block (d).
    pub block_size: usize,
    pub base_learner: HoeffdingTreeConfig,
    /// Added to every weight denominator.
    pub weight_epsilon: f64,
}

impl Default for OaueConfig {
    fn default() -> Self {
        OaueConfig {
            max_members: 100,
            block_size: 500,
            base_learner: HoeffdingTreeConfig::default(),
            weight_epsilon: 1e-9,
        }
    }
}

/// `mse_r = Σ_c p(c)·(1 − p(c))²` for the block class counts.
pub fn block_mse_r(class_counts: [f64; 2]) -> f64 {
    let total = class_counts[0] + class_counts[1];
    if total <= 0.0 {
        return 0.0;
    }
    class_counts
        .iter()
        .map(|&c| {
            let p = c / total;
            p * (1.0 - p) * (1.0 - p)
        })
        .sum()
}

/// Member weight `1 / (mse_r + mse_i + ε)`.
pub fn oaue_weight(mse_r: f64, mse_i: f64, epsilon: f64) -> f64 {
    1.0 / (mse_r + mse_i + epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Member {
    tree: HoeffdingTree,
    weight: f64,
    /// Σ (1 − f^y(x))² over the current block, measured before training.
    block_sq_error: f64,
    block_seen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oaue {
    config: OaueConfig,
    members: Vec<Member>,
    candidate: HoeffdingTree,
    block_counts: [f64; 2],
    block_seen: usize,
}

impl Oaue {
    pub fn new(config: OaueConfig) -> Result<Self> {
        if config.max_members == 0 || config.block_size == 0 {
            return Err(Error::InvalidConfig(
                "OAUE needs max_members >= 1 and block_size >= 1".into(),
            ));
        }
        if config.weight_epsilon.is_nan() || config.weight_epsilon <= 0.0 {
            return Err(Error::InvalidConfig(
                "weight_epsilon must be positive".into(),
            ));
        }
        let candidate = HoeffdingTree::new(config.base_learner.clone())?;
        Ok(Oaue {
            config,
            members: Vec::new(),
            candidate,
            block_counts: [0.0; 2],
            block_seen: 0,
        })
    }

    pub fn num_members(&self) -> usize {
        self.members.len()
    }

    pub fn member_weights(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.weight).collect()
    }

    fn end_block(&mut self) {
        let eps = self.config.weight_epsilon;
        let mse_r = block_mse_r(self.block_counts);
        for m in &mut self.members {
            let mse_i = if m.block_seen > 0.0 {
                m.block_sq_error / m.block_seen
            } else {
                0.0
            };
            m.weight = oaue_weight(mse_r, mse_i, eps);
            m.block_sq_error = 0.0;
            m.block_seen = 0.0;
        }
        let fresh = HoeffdingTree::new(self.config.base_learner.clone())
            .expect("base learner config validated at construction");
        let candidate = std::mem::replace(&mut self.candidate, fresh);
        self.members.push(Member {
            tree: candidate,
            weight: oaue_weight(mse_r, 0.0, eps),
            block_sq_error: 0.0,
            block_seen: 0.0,
        });
        while self.members.len() > self.config.max_members {
            let worst = self
                .members
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.weight.total_cmp(&b.1.weight))
                .map(|(i, _)| i)
                .expect("ensemble is non-empty");
            self.members.remove(worst);
        }
        self.block_counts = [0.0; 2];
        self.block_seen = 0;
    }
}

impl OnlineClassifier for Oaue {
    fn name(&self) -> &'static str {
        "oaue"
    }

    /// Weighted average of member posteriors. Before the first block
    /// completes the in-progress candidate answers alone.
    fn predict(&self, x: &FeatureVector) -> Prediction {
        if self.members.is_empty() {
            return self.candidate.predict(x);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for m in &self.members {
            num += m.weight * m.tree.predict(x).score;
            den += m.weight;
        }
        Prediction::from_score(num / den)
    }

    fn learn(&mut self, sample: &LabeledSample) -> Result<()> {
        let violated = sample.label.is_violated();
        for m in &mut self.members {
            let p = m.tree.predict(&sample.features).score;
            let p_true = if violated { p } else { 1.0 - p };
            m.block_sq_error += (1.0 - p_true) * (1.0 - p_true);
            m.block_seen += 1.0;
            m.tree.learn(sample)?;
        }
        self.candidate.learn(sample)?;
        self.block_counts[sample.label.class_index()] += 1.0;
        self.block_seen += 1;
        if self.block_seen == self.config.block_size {
            self.end_block();
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.members.clear();
        self.candidate.reset();
        self.block_counts = [0.0; 2];
        self.block_seen = 0;
    }
}
