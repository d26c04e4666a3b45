//! Versioned JSON snapshots of trained models.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HoeffdingTree, Oaue, SgdLogistic, TrainedModel};
use crate::error::{Error, Result};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSnapshot {
    SgdLogistic(Box<SgdLogistic>),
    HoeffdingTree(HoeffdingTree),
    Oaue(Oaue),
    Offline(TrainedModel),
}

#[derive(Serialize)]
struct EnvelopeRef<'a> {
    format: &'static str,
    version: u32,
    #[serde(flatten)]
    body: &'a ModelSnapshot,
}

#[derive(Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: ModelSnapshot,
}

const FORMAT: &str = "slastream-model";

impl ModelSnapshot {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&EnvelopeRef {
            format: FORMAT,
            version: SNAPSHOT_VERSION,
            body: self,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(s)?;
        if env.format != FORMAT {
            return Err(Error::Snapshot(format!("unknown format {:?}", env.format)));
        }
        if env.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "version {} (supported: {SNAPSHOT_VERSION})",
                env.version
            )));
        }
        Ok(env.body)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{
        train_offline, HoeffdingTreeConfig, OaueConfig, OfflineMethod, OfflineModel,
        OnlineClassifier, RandomForestConfig, SgdLogisticConfig,
    };
    use crate::types::{FeatureVector, LabeledSample, SlaLabel, NUM_FEATURES};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        (0..n)
            .map(|i| {
                let mut v = [0.0; NUM_FEATURES];
                for x in v.iter_mut() {
                    *x = rng.random_range(0.0..100.0) / 3.0;
                }
                let label = if v[0] + rng.random_range(0.0..10.0) > 20.0 {
                    SlaLabel::Violated
                } else {
                    SlaLabel::Conforming
                };
                LabeledSample::new(i as f64, FeatureVector::new(v).unwrap(), label)
            })
            .collect()
    }

    fn scores_online(m: &dyn OnlineClassifier, d: &[LabeledSample]) -> Vec<u64> {
        d.iter()
            .map(|s| m.predict(&s.features).score.to_bits())
            .collect()
    }

    #[test]
    fn online_models_round_trip() {
        let d = data(1500);
        let mut sgd = SgdLogistic::new(SgdLogisticConfig::default()).unwrap();
        let mut ht = HoeffdingTree::new(HoeffdingTreeConfig::default()).unwrap();
        let mut oa = Oaue::new(OaueConfig {
            block_size: 200,
            ..Default::default()
        })
        .unwrap();
        for c in d.chunks(10) {
            sgd.learn_chunk(c).unwrap();
            ht.learn_chunk(c).unwrap();
            oa.learn_chunk(c).unwrap();
        }
        for snap in [
            ModelSnapshot::SgdLogistic(Box::new(sgd)),
            ModelSnapshot::HoeffdingTree(ht),
            ModelSnapshot::Oaue(oa),
        ] {
            let back = ModelSnapshot::from_json(&snap.to_json().unwrap()).unwrap();
            assert_eq!(back, snap);
            let (a, b): (&dyn OnlineClassifier, &dyn OnlineClassifier) = match (&snap, &back) {
                (ModelSnapshot::SgdLogistic(a), ModelSnapshot::SgdLogistic(b)) => (&**a, &**b),
                (ModelSnapshot::HoeffdingTree(a), ModelSnapshot::HoeffdingTree(b)) => (a, b),
                (ModelSnapshot::Oaue(a), ModelSnapshot::Oaue(b)) => (a, b),
                _ => unreachable!(),
            };
            assert_eq!(scores_online(a, &d), scores_online(b, &d));
        }
    }

    #[test]
    fn offline_models_round_trip() {
        let d = data(600);
        for method in [
            OfflineMethod::Logistic(Default::default()),
            OfflineMethod::Cart(Default::default()),
            OfflineMethod::RandomForest(RandomForestConfig {
                n_trees: 10,
                ..Default::default()
            }),
        ] {
            let m = train_offline(&method, &d, 3).unwrap();
            let snap = ModelSnapshot::Offline(m.clone());
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("model.json");
            snap.save(&path).unwrap();
            let ModelSnapshot::Offline(back) = ModelSnapshot::load(&path).unwrap() else {
                panic!("wrong model kind");
            };
            for s in &d {
                assert_eq!(
                    m.predict(&s.features).score.to_bits(),
                    back.predict(&s.features).score.to_bits()
                );
            }
        }
    }

    #[test]
    fn rejects_unknown_version() {
        let snap = ModelSnapshot::HoeffdingTree(
            HoeffdingTree::new(HoeffdingTreeConfig::default()).unwrap(),
        );
        let json = snap
            .to_json()
            .unwrap()
            .replace("\"version\":1", "\"version\":99");
        assert!(matches!(
            ModelSnapshot::from_json(&json),
            Err(Error::Snapshot(_))
        ));
    }
}
