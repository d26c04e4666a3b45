//! Online classifiers (SGD logistic regression, Hoeffding tree, OAUE) and
//! offline baselines (batch logistic regression, CART, random forest).

mod cart;
mod forest;
mod gaussian;
mod hoeffding;
mod logistic;
mod oaue;
mod sgd;
mod snapshot;

pub use cart::{CartConfig, CartTree};
pub use forest::{RandomForest, RandomForestConfig};
pub use gaussian::GaussianEstimator;
pub use hoeffding::{
    adaptive_nb_leaf_predict, hoeffding_bound, hoeffding_try_split, HoeffdingTree,
    HoeffdingTreeConfig, LeafPredictor, LeafStats, SplitDecision,
};
pub use logistic::{BatchLogistic, BatchLogisticConfig};
pub use oaue::{block_mse_r, oaue_weight, Oaue, OaueConfig};
pub use sgd::{SgdLogistic, SgdLogisticConfig};
pub use snapshot::{ModelSnapshot, SNAPSHOT_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FeatureVector, LabeledSample, Prediction};

/// Predict/learn contract shared by the online methods.
///
/// `predict` never mutates the model. `learn` calls on one instance must be
/// serialized by the caller.
pub trait OnlineClassifier: Send + Sync {
    fn name(&self) -> &'static str;

    fn predict(&self, x: &FeatureVector) -> Prediction;

    fn learn(&mut self, sample: &LabeledSample) -> Result<()>;

    /// Consume a chunk of samples. The default feeds them one at a time;
    /// learners with a native chunked regime override this.
    fn learn_chunk(&mut self, chunk: &[LabeledSample]) -> Result<()> {
        for s in chunk {
            self.learn(s)?;
        }
        Ok(())
    }

    fn reset(&mut self);
}

/// A frozen, trained predictor.
pub trait OfflineModel: Send + Sync {
    fn predict(&self, x: &FeatureVector) -> Prediction;
}

/// The online method families, with their configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum OnlineMethod {
    SgdLogistic(#[serde(default)] SgdLogisticConfig),
    HoeffdingTree(#[serde(default)] HoeffdingTreeConfig),
    Oaue(#[serde(default)] OaueConfig),
}

impl OnlineMethod {
    pub fn build(&self) -> Result<Box<dyn OnlineClassifier>> {
        Ok(match self {
            OnlineMethod::SgdLogistic(c) => Box::new(SgdLogistic::new(c.clone())?),
            OnlineMethod::HoeffdingTree(c) => Box::new(HoeffdingTree::new(c.clone())?),
            OnlineMethod::Oaue(c) => Box::new(Oaue::new(c.clone())?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            OnlineMethod::SgdLogistic(_) => "sgd_logistic",
            OnlineMethod::HoeffdingTree(_) => "hoeffding_tree",
            OnlineMethod::Oaue(_) => "oaue",
        }
    }
}

/// The offline method families, with their configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum OfflineMethod {
    Logistic(#[serde(default)] BatchLogisticConfig),
    Cart(#[serde(default)] CartConfig),
    RandomForest(#[serde(default)] RandomForestConfig),
}

impl OfflineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            OfflineMethod::Logistic(_) => "logistic",
            OfflineMethod::Cart(_) => "cart",
            OfflineMethod::RandomForest(_) => "random_forest",
        }
    }
}

/// A trained offline model of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Logistic(Box<BatchLogistic>),
    Cart(CartTree),
    RandomForest(RandomForest),
}

impl OfflineModel for TrainedModel {
    fn predict(&self, x: &FeatureVector) -> Prediction {
        match self {
            TrainedModel::Logistic(m) => m.predict(x),
            TrainedModel::Cart(m) => m.predict(x),
            TrainedModel::RandomForest(m) => m.predict(x),
        }
    }
}

/// Train an offline model. `seed` drives every random choice (bootstrap
/// resampling and feature subsampling in the random forest).
pub fn train_offline(
    method: &OfflineMethod,
    training_set: &[LabeledSample],
    seed: u64,
) -> Result<TrainedModel> {
    check_both_classes(training_set)?;
    Ok(match method {
        OfflineMethod::Logistic(c) => {
            TrainedModel::Logistic(Box::new(BatchLogistic::fit(c, training_set)?))
        }
        OfflineMethod::Cart(c) => TrainedModel::Cart(CartTree::fit(c, training_set)?),
        OfflineMethod::RandomForest(c) => {
            TrainedModel::RandomForest(RandomForest::fit(c, training_set, seed)?)
        }
    })
}

pub(crate) fn check_both_classes(data: &[LabeledSample]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::DegenerateTrainingSet("no samples".into()));
    }
    let violated = data.iter().filter(|s| s.label.is_violated()).count();
    if violated == 0 || violated == data.len() {
        return Err(Error::DegenerateTrainingSet(format!(
            "{} samples, all {}",
            data.len(),
            data[0].label
        )));
    }
    Ok(())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
