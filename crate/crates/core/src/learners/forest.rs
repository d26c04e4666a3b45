//! Random forest of bootstrap CART trees with per-split feature sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{CartConfig, CartTree, FeatureChoice, TrainingView};
use super::OfflineModel;
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::types::{FeatureVector, LabeledSample, Prediction, NUM_FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomForestConfig {
    pub n_trees: usize,
    /// Features drawn per split; ⌈√21⌉ = 5 by default.
    pub max_features: usize,
    pub bootstrap: bool,
    pub tree: CartConfig,
}

impl Default for RandomForestConfig {
    fn default() -> Self {
        RandomForestConfig {
            n_trees: 100,
            max_features: (NUM_FEATURES as f64).sqrt().ceil() as usize,
            bootstrap: true,
            tree: CartConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<CartTree>,
}

impl RandomForest {
    pub fn fit(config: &RandomForestConfig, data: &[LabeledSample], seed: u64) -> Result<Self> {
        super::check_both_classes(data)?;
        CartTree::validate_config(&config.tree)?;
        if config.n_trees == 0 || config.max_features == 0 || config.max_features > NUM_FEATURES {
            return Err(Error::InvalidConfig(format!(
                "random forest needs n_trees >= 1 and 1 <= max_features <= {NUM_FEATURES}"
            )));
        }
        let view = TrainingView::new(data);
        let n = data.len();
        let trees = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                let mut indices: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let features = if config.max_features == NUM_FEATURES {
                    FeatureChoice::All
                } else {
                    FeatureChoice::Random {
                        per_split: config.max_features,
                        rng: &mut rng,
                    }
                };
                CartTree::grow(&config.tree, &view, &mut indices, features)
            })
            .collect();
        Ok(RandomForest { trees })
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }
}

impl OfflineModel for RandomForest {
    /// Majority vote; the score is the fraction of trees voting `violated`.
    fn predict(&self, x: &FeatureVector) -> Prediction {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict(x).label.is_violated())
            .count();
        Prediction::from_score(votes as f64 / self.trees.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SlaLabel;

    fn noisy_data(n: usize, seed: u64) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let mut v = [0.0; NUM_FEATURES];
                for x in v.iter_mut() {
                    *x = rng.random_range(0.0..100.0);
                }
                let flip = rng.random_bool(0.1);
                let y = (v[2] + v[3] > 100.0) ^ flip;
                let label = if y {
                    SlaLabel::Violated
                } else {
                    SlaLabel::Conforming
                };
                LabeledSample::new(i as f64, FeatureVector::new(v).unwrap(), label)
            })
            .collect()
    }

    #[test]
    fn one_tree_without_bootstrap_equals_cart() {
        let d = noisy_data(400, 1);
        let cfg = RandomForestConfig {
            n_trees: 1,
            max_features: NUM_FEATURES,
            bootstrap: false,
            ..Default::default()
        };
        let rf = RandomForest::fit(&cfg, &d, 9).unwrap();
        let cart = CartTree::fit(&CartConfig::default(), &d).unwrap();
        let probe = noisy_data(300, 2);
        for s in &probe {
            assert_eq!(
                rf.predict(&s.features).label,
                cart.predict(&s.features).label
            );
        }
    }

    #[test]
    fn seeded_training_is_deterministic() {
        let d = noisy_data(300, 3);
        let cfg = RandomForestConfig {
            n_trees: 20,
            ..Default::default()
        };
        let a = RandomForest::fit(&cfg, &d, 5).unwrap();
        let b = RandomForest::fit(&cfg, &d, 5).unwrap();
        assert_eq!(a, b);
        let c = RandomForest::fit(&cfg, &d, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn forest_generalizes_at_least_as_well_as_a_single_tree() {
        let train = noisy_data(1500, 4);
        let test = noisy_data(1000, 5);
        let rf = RandomForest::fit(&RandomForestConfig::default(), &train, 1).unwrap();
        let cart = CartTree::fit(&CartConfig::default(), &train).unwrap();
        let acc = |m: &dyn OfflineModel| {
            test.iter()
                .filter(|s| m.predict(&s.features).label == s.label)
                .count() as f64
                / test.len() as f64
        };
        let (rf_ca, cart_ca) = (acc(&rf), acc(&cart));
        assert!(rf_ca + 0.01 >= cart_ca, "rf {rf_ca} cart {cart_ca}");
        assert!(rf_ca > 0.8);
    }

    #[test]
    fn invalid_config() {
        let d = noisy_data(50, 6);
        let cfg = RandomForestConfig {
            max_features: 0,
            ..Default::default()
        };
        assert!(RandomForest::fit(&cfg, &d, 0).is_err());
    }
}
