//! Very Fast Decision Tree (Hoeffding tree) for numeric attributes.
//!
//! Each leaf keeps class counts and a per-class Gaussian summary of every
//! attribute. Every `grace_period` samples a leaf evaluates `numeric_bins`
//! equally spaced thresholds per attribute by information gain and splits
//! when the Hoeffding bound separates the two best attributes, or when the
//! bound has shrunk below the tie threshold.

use serde::{Deserialize, Serialize};

use super::gaussian::GaussianEstimator;
use super::OnlineClassifier;
use crate::error::{Error, Result};
use crate::types::{FeatureVector, LabeledSample, Prediction, NUM_FEATURES};

/// Smallest fraction of the leaf weight each branch of a candidate split
/// must receive.
const MIN_BRANCH_FRACTION: f64 = 0.01;

/// `ε = sqrt(R² ln(1/δ) / 2n)`.
pub fn hoeffding_bound(range: f64, confidence: f64, n: f64) -> f64 {
    (range * range * (1.0 / confidence).ln() / (2.0 * n)).sqrt()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafPredictor {
    Majority,
    NaiveBayes,
    #[default]
    AdaptiveNb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoeffdingTreeConfig {
    /// Samples a leaf must see between split evaluations (n_min).
    pub grace_period: u32,
    /// δ.
    pub split_confidence: f64,
    /// τ.
    pub tie_threshold: f64,
    pub leaf_predictor: LeafPredictor,
    /// Candidate thresholds evaluated per numeric attribute.
    pub numeric_bins: u32,
}

impl Default for HoeffdingTreeConfig {
    fn default() -> Self {
        HoeffdingTreeConfig {
            grace_period: 100,
            split_confidence: 0.01,
            tie_threshold: 0.05,
            leaf_predictor: LeafPredictor::AdaptiveNb,
            numeric_bins: 10,
        }
    }
}

impl HoeffdingTreeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_confidence > 0.0 && self.split_confidence < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split_confidence must lie in (0, 1), got {}",
                self.split_confidence
            )));
        }
        if self.tie_threshold.is_nan() || self.tie_threshold < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tie_threshold must be >= 0, got {}",
                self.tie_threshold
            )));
        }
        if self.grace_period == 0 || self.numeric_bins == 0 {
            return Err(Error::InvalidConfig(
                "grace_period and numeric_bins must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Sufficient statistics held by a tree leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafStats {
    /// Observed class weights, indexed by class (conforming = 0).
    class_counts: [f64; 2],
    /// Class distribution inherited from the parent's split estimate, used
    /// as pseudo-counts by the majority predictor.
    prior: [f64; 2],
    observers: Vec<[GaussianEstimator; 2]>,
    mc_correct: f64,
    nb_correct: f64,
    weight_at_last_eval: f64,
}

impl Default for LeafStats {
    fn default() -> Self {
        Self::with_prior([0.0, 0.0])
    }
}

impl LeafStats {
    pub fn with_prior(prior: [f64; 2]) -> Self {
        LeafStats {
            class_counts: [0.0; 2],
            prior,
            observers: vec![Default::default(); NUM_FEATURES],
            mc_correct: 0.0,
            nb_correct: 0.0,
            weight_at_last_eval: 0.0,
        }
    }

    pub fn class_counts(&self) -> [f64; 2] {
        self.class_counts
    }

    pub fn weight_seen(&self) -> f64 {
        self.class_counts[0] + self.class_counts[1]
    }

    pub fn correct_counters(&self) -> (f64, f64) {
        (self.mc_correct, self.nb_correct)
    }

    /// Update the adaptive-prediction counters and all summaries.
    pub fn observe(&mut self, sample: &LabeledSample) {
        let y = sample.label.class_index();
        let truth = y == 1;
        if (self.majority_score() >= 0.5) == truth {
            self.mc_correct += 1.0;
        }
        if (self.naive_bayes_score(&sample.features) >= 0.5) == truth {
            self.nb_correct += 1.0;
        }
        self.class_counts[y] += 1.0;
        for (obs, &v) in self.observers.iter_mut().zip(sample.features.values()) {
            obs[y].add(v);
        }
    }

    /// Probability of `violated` from class counts plus inherited prior.
    /// Uniform when the leaf knows nothing.
    pub fn majority_score(&self) -> f64 {
        let c0 = self.class_counts[0] + self.prior[0];
        let c1 = self.class_counts[1] + self.prior[1];
        if c0 + c1 > 0.0 {
            c1 / (c0 + c1)
        } else {
            0.5
        }
    }

    /// Gaussian naive Bayes posterior of `violated`. Falls back to the
    /// majority score until both classes have been observed at this leaf.
    pub fn naive_bayes_score(&self, x: &FeatureVector) -> f64 {
        if self.class_counts[0] == 0.0 || self.class_counts[1] == 0.0 {
            return self.majority_score();
        }
        let mut log_post = [0.0f64; 2];
        for (c, lp) in log_post.iter_mut().enumerate() {
            *lp = (self.class_counts[c] + self.prior[c]).ln()
                + self
                    .observers
                    .iter()
                    .zip(x.values())
                    .map(|(obs, &v)| obs[c].log_pdf(v))
                    .sum::<f64>();
        }
        let m = log_post[0].max(log_post[1]);
        let e0 = (log_post[0] - m).exp();
        let e1 = (log_post[1] - m).exp();
        e1 / (e0 + e1)
    }
}

/// Leaf prediction under the adaptive rule: naive Bayes when its running
/// training accuracy at the leaf is strictly higher, majority otherwise.
pub fn adaptive_nb_leaf_predict(leaf: &LeafStats, x: &FeatureVector) -> Prediction {
    if leaf.nb_correct > leaf.mc_correct {
        Prediction::from_score(leaf.naive_bayes_score(x))
    } else {
        Prediction::from_score(leaf.majority_score())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitDecision {
    NoSplit,
    Split {
        feature: usize,
        threshold: f64,
        merit: f64,
        second_merit: f64,
        epsilon: f64,
        /// Estimated class weights routed to each branch.
        left: [f64; 2],
        right: [f64; 2],
    },
}

fn entropy(counts: &[f64; 2]) -> f64 {
    let total = counts[0] + counts[1];
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

struct Candidate {
    feature: usize,
    threshold: f64,
    merit: f64,
    left: [f64; 2],
    right: [f64; 2],
}

fn best_split_for_feature(
    feature: usize,
    obs: &[GaussianEstimator; 2],
    counts: &[f64; 2],
    bins: u32,
) -> Option<Candidate> {
    let (lo, hi) = match (obs[0].range(), obs[1].range()) {
        (Some(a), Some(b)) => (a.0.min(b.0), a.1.max(b.1)),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return None,
    };
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return None;
    }
    let total = counts[0] + counts[1];
    let parent = entropy(counts);
    let step = (hi - lo) / (bins as f64 + 1.0);
    let mut best: Option<Candidate> = None;
    for i in 1..=bins {
        let threshold = lo + step * i as f64;
        let mut left = [0.0; 2];
        let mut right = [0.0; 2];
        for c in 0..2 {
            let w = obs[c].weight();
            left[c] = w * obs[c].cdf(threshold);
            right[c] = w - left[c];
        }
        let wl = left[0] + left[1];
        let wr = right[0] + right[1];
        if wl.min(wr) < MIN_BRANCH_FRACTION * total {
            continue;
        }
        let merit = parent - (wl * entropy(&left) + wr * entropy(&right)) / total;
        if best.as_ref().is_none_or(|b| merit > b.merit) {
            best = Some(Candidate {
                feature,
                threshold,
                merit,
                left,
                right,
            });
        }
    }
    best
}

/// Evaluate a leaf for splitting. Callers are expected to invoke this only
/// once the grace period has elapsed.
pub fn hoeffding_try_split(leaf: &LeafStats, config: &HoeffdingTreeConfig) -> SplitDecision {
    let counts = leaf.class_counts;
    if counts[0] == 0.0 || counts[1] == 0.0 {
        return SplitDecision::NoSplit;
    }
    let mut candidates: Vec<Candidate> = leaf
        .observers
        .iter()
        .enumerate()
        .filter_map(|(f, obs)| best_split_for_feature(f, obs, &counts, config.numeric_bins))
        .collect();
    // stable sort keeps the lowest feature index first among equal merits
    candidates.sort_by(|a, b| b.merit.total_cmp(&a.merit));
    let Some(best) = candidates.first() else {
        return SplitDecision::NoSplit;
    };
    if best.merit <= 1e-12 {
        return SplitDecision::NoSplit;
    }
    let second_merit = candidates.get(1).map_or(0.0, |c| c.merit.max(0.0));
    // two classes: information gain ranges over log2(2) = 1
    let epsilon = hoeffding_bound(1.0, config.split_confidence, leaf.weight_seen());
    if best.merit - second_merit > epsilon || epsilon < config.tie_threshold {
        SplitDecision::Split {
            feature: best.feature,
            threshold: best.threshold,
            merit: best.merit,
            second_merit,
            epsilon,
            left: best.left,
            right: best.right,
        }
    } else {
        SplitDecision::NoSplit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(LeafStats),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    config: HoeffdingTreeConfig,
    nodes: Vec<Node>,
}

impl HoeffdingTree {
    pub fn new(config: HoeffdingTreeConfig) -> Result<Self> {
        config.validate()?;
        Ok(HoeffdingTree {
            config,
            nodes: vec![Node::Leaf(LeafStats::default())],
        })
    }

    pub fn config(&self) -> &HoeffdingTreeConfig {
        &self.config
    }

    fn leaf_index(&self, x: &FeatureVector) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(_) => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn leaf_for(&self, x: &FeatureVector) -> &LeafStats {
        match &self.nodes[self.leaf_index(x)] {
            Node::Leaf(l) => l,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    pub fn num_splits(&self) -> usize {
        self.nodes.len() - self.num_leaves()
    }

    /// Attribute tested at the root, if the tree has split.
    pub fn root_feature(&self) -> Option<usize> {
        match &self.nodes[0] {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf(_) => None,
        }
    }

    /// Probability of `violated` for `x`.
    pub fn score(&self, x: &FeatureVector) -> f64 {
        self.predict(x).score
    }

    fn learn_one(&mut self, sample: &LabeledSample) {
        let idx = self.leaf_index(&sample.features);
        let Node::Leaf(leaf) = &mut self.nodes[idx] else {
            unreachable!("leaf_index returns a leaf")
        };
        leaf.observe(sample);
        let seen = leaf.weight_seen();
        if seen - leaf.weight_at_last_eval < self.config.grace_period as f64 {
            return;
        }
        leaf.weight_at_last_eval = seen;
        if let SplitDecision::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = hoeffding_try_split(leaf, &self.config)
        {
            let l = self.nodes.len();
            self.nodes.push(Node::Leaf(LeafStats::with_prior(left)));
            self.nodes.push(Node::Leaf(LeafStats::with_prior(right)));
            self.nodes[idx] = Node::Split {
                feature,
                threshold,
                left: l,
                right: l + 1,
            };
        }
    }
}

impl OnlineClassifier for HoeffdingTree {
    fn name(&self) -> &'static str {
        "hoeffding_tree"
    }

    fn predict(&self, x: &FeatureVector) -> Prediction {
        let leaf = self.leaf_for(x);
        match self.config.leaf_predictor {
            LeafPredictor::Majority => Prediction::from_score(leaf.majority_score()),
            LeafPredictor::NaiveBayes => Prediction::from_score(leaf.naive_bayes_score(x)),
            LeafPredictor::AdaptiveNb => adaptive_nb_leaf_predict(leaf, x),
        }
    }

    fn learn(&mut self, sample: &LabeledSample) -> Result<()> {
        self.learn_one(sample);
        Ok(())
    }

    fn reset(&mut self) {
        self.nodes = vec![Node::Leaf(LeafStats::default())];
    }
}
