//! Gini-impurity binary classification tree.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::OfflineModel;
use crate::error::{Error, Result};
use crate::types::{FeatureVector, LabeledSample, Prediction, NUM_FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartConfig {
    /// Nodes with fewer samples become leaves.
    pub min_samples_split: usize,
    /// Optional depth cap; unlimited by default.
    pub max_depth: Option<usize>,
}

impl Default for CartConfig {
    fn default() -> Self {
        CartConfig {
            min_samples_split: 5,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum CartNode {
    Leaf {
        /// Fraction of `violated` training samples reaching the leaf.
        score: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartTree {
    nodes: Vec<CartNode>,
}

/// Column-friendly copy of a training set.
pub(crate) struct TrainingView {
    rows: Vec<[f64; NUM_FEATURES]>,
    labels: Vec<u8>,
}

impl TrainingView {
    pub(crate) fn new(data: &[LabeledSample]) -> Self {
        TrainingView {
            rows: data.iter().map(|s| *s.features.values()).collect(),
            labels: data.iter().map(|s| s.label.class_index() as u8).collect(),
        }
    }
}

/// Feature subsampling policy during growth.
pub(crate) enum FeatureChoice<'a, R: Rng> {
    All,
    Random { per_split: usize, rng: &'a mut R },
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

struct Builder<'v, 'a, R: Rng> {
    view: &'v TrainingView,
    config: &'v CartConfig,
    features: FeatureChoice<'a, R>,
    nodes: Vec<CartNode>,
    scratch: Vec<(f64, u8)>,
}

impl<R: Rng> Builder<'_, '_, R> {
    fn grow(&mut self, indices: &mut [usize], depth: usize) -> usize {
        let n = indices.len();
        let pos = indices
            .iter()
            .filter(|&&i| self.view.labels[i] == 1)
            .count();
        let id = self.nodes.len();
        self.nodes.push(CartNode::Leaf {
            score: pos as f64 / n as f64,
        });
        let pure = pos == 0 || pos == n;
        let depth_capped = self.config.max_depth.is_some_and(|d| depth >= d);
        if pure || n < self.config.min_samples_split || depth_capped {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(indices, pos) else {
            return id;
        };
        // partition in place: left = value <= threshold
        let mut mid = 0;
        for k in 0..n {
            if self.view.rows[indices[k]][feature] <= threshold {
                indices.swap(k, mid);
                mid += 1;
            }
        }
        let (l, r) = indices.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = CartNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        match &mut self.features {
            FeatureChoice::All => (0..NUM_FEATURES).collect(),
            FeatureChoice::Random { per_split, rng } => {
                let mut v =
                    sample_indices(*rng, NUM_FEATURES, (*per_split).min(NUM_FEATURES)).into_vec();
                v.sort_unstable();
                v
            }
        }
    }

    fn best_split(&mut self, indices: &[usize], pos: usize) -> Option<(usize, f64)> {
        let n = indices.len() as f64;
        let parent = gini(pos as f64, n);
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in self.candidate_features() {
            self.scratch.clear();
            self.scratch.extend(
                indices
                    .iter()
                    .map(|&i| (self.view.rows[i][feature], self.view.labels[i])),
            );
            self.scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0.0;
            for k in 0..self.scratch.len() - 1 {
                left_pos += self.scratch[k].1 as f64;
                let (v, next) = (self.scratch[k].0, self.scratch[k + 1].0);
                if v == next {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let impurity = (nl * gini(left_pos, nl) + nr * gini(pos as f64 - left_pos, nr)) / n;
                let gain = parent - impurity;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.0) {
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some((gain, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl CartTree {
    pub fn fit(config: &CartConfig, data: &[LabeledSample]) -> Result<Self> {
        super::check_both_classes(data)?;
        let view = TrainingView::new(data);
        let mut indices: Vec<usize> = (0..data.len()).collect();
        Ok(Self::grow::<rand_chacha::ChaCha8Rng>(
            config,
            &view,
            &mut indices,
            FeatureChoice::All,
        ))
    }

    pub(crate) fn grow<R: Rng>(
        config: &CartConfig,
        view: &TrainingView,
        indices: &mut [usize],
        features: FeatureChoice<'_, R>,
    ) -> Self {
        let mut builder = Builder {
            view,
            config,
            features,
            nodes: Vec::new(),
            scratch: Vec::with_capacity(indices.len()),
        };
        builder.grow(indices, 0);
        CartTree {
            nodes: builder.nodes,
        }
    }

    pub(crate) fn validate_config(config: &CartConfig) -> Result<()> {
        if config.min_samples_split < 2 {
            return Err(Error::InvalidConfig(
                "min_samples_split must be >= 2".into(),
            ));
        }
        Ok(())
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, CartNode::Leaf { .. }))
            .count()
    }

    pub fn score(&self, x: &FeatureVector) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                CartNode::Leaf { score } => return *score,
                CartNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}

impl OfflineModel for CartTree {
    fn predict(&self, x: &FeatureVector) -> Prediction {
        Prediction::from_score(self.score(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SlaLabel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(
        n: usize,
        seed: u64,
        concept: impl Fn(&[f64; NUM_FEATURES]) -> bool,
    ) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let mut v = [0.0; NUM_FEATURES];
                for x in v.iter_mut() {
                    *x = rng.random_range(0.0..100.0);
                }
                let label = if concept(&v) {
                    SlaLabel::Violated
                } else {
                    SlaLabel::Conforming
                };
                LabeledSample::new(i as f64, FeatureVector::new(v).unwrap(), label)
            })
            .collect()
    }

    #[test]
    fn pure_split_gives_perfect_training_accuracy() {
        let d = data(400, 1, |v| v[6] > 55.0);
        let t = CartTree::fit(&CartConfig::default(), &d).unwrap();
        assert!(d.iter().all(|s| t.predict(&s.features).label == s.label));
        assert_eq!(t.num_leaves(), 2);
    }

    #[test]
    fn grows_until_pure_or_small() {
        let d = data(500, 2, |v| (v[0] > 50.0) ^ (v[1] > 50.0));
        let t = CartTree::fit(&CartConfig::default(), &d).unwrap();
        let ca = d
            .iter()
            .filter(|s| t.predict(&s.features).label == s.label)
            .count();
        // only leaves below the split minimum may stay mixed
        assert!(ca as f64 >= 0.98 * d.len() as f64, "{ca}/{}", d.len());
    }

    #[test]
    fn depth_cap_limits_growth() {
        let d = data(500, 3, |v| (v[0] > 50.0) ^ (v[1] > 50.0));
        let cfg = CartConfig {
            max_depth: Some(1),
            ..Default::default()
        };
        let t = CartTree::fit(&cfg, &d).unwrap();
        assert!(t.num_leaves() <= 2);
    }

    #[test]
    fn degenerate_training_set() {
        let d = data(50, 4, |_| false);
        assert!(matches!(
            CartTree::fit(&CartConfig::default(), &d),
            Err(Error::DegenerateTrainingSet(_))
        ));
    }
}
