//! Evaluation protocols: random holdout and cross-trace testing for offline
//! models, chunked test-then-train (prequential) for online models, and the
//! cumulative / sliding-window accuracy series.

use std::collections::VecDeque;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{train_offline, OfflineMethod, OfflineModel, OnlineClassifier};
use crate::metrics::{compute_metrics, ConfusionMatrix, FarVariant, MetricsReport};
use crate::seed::derive_seed;
use crate::types::LabeledSample;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrequentialConfig {
    pub chunk_size: usize,
    /// Leading samples used for training only, never scored.
    pub bootstrap_size: usize,
    pub sliding_windows: Vec<usize>,
}

impl Default for PrequentialConfig {
    fn default() -> Self {
        PrequentialConfig {
            chunk_size: 10,
            bootstrap_size: 500,
            sliding_windows: vec![5000, 1000],
        }
    }
}

impl PrequentialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk_size must be >= 1".into()));
        }
        if self.sliding_windows.contains(&0) {
            return Err(Error::InvalidConfig("sliding windows must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mean of the most recent `min(n, window)` bits at every index `n`.
pub fn sliding_accuracy(bits: &[bool], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be >= 1");
    let mut recent = VecDeque::with_capacity(window);
    let mut correct = 0usize;
    bits.iter()
        .map(|&b| {
            if recent.len() == window && recent.pop_front() == Some(true) {
                correct -= 1;
            }
            recent.push_back(b);
            correct += b as usize;
            correct as f64 / recent.len() as f64
        })
        .collect()
}

/// Per-sample correctness of the scored part of a stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracySeries {
    bits: Vec<bool>,
    windows: Vec<usize>,
}

impl AccuracySeries {
    pub fn new(bits: Vec<bool>, windows: Vec<usize>) -> Self {
        AccuracySeries { bits, windows }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn windows(&self) -> &[usize] {
        &self.windows
    }

    /// Asymptotic accuracy: correct count over the first `n` samples.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut correct = 0usize;
        self.bits
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                correct += b as usize;
                correct as f64 / (i + 1) as f64
            })
            .collect()
    }

    pub fn sliding(&self, window: usize) -> Vec<f64> {
        sliding_accuracy(&self.bits, window)
    }

    /// Writes `index,cumulative,win_<w>...` with a 1-based index. With
    /// `stride > 1` only every `stride`-th row and the final row are kept.
    pub fn write_csv<W: Write>(&self, mut out: W, stride: usize) -> std::io::Result<()> {
        let stride = stride.max(1);
        let cumulative = self.cumulative();
        let sliding: Vec<Vec<f64>> = self.windows.iter().map(|&w| self.sliding(w)).collect();
        write!(out, "index,cumulative")?;
        for w in &self.windows {
            write!(out, ",win_{w}")?;
        }
        writeln!(out)?;
        let n = self.bits.len();
        for i in 0..n {
            let index = i + 1;
            if index % stride != 0 && index != n {
                continue;
            }
            write!(out, "{index},{}", cumulative[i])?;
            for s in &sliding {
                write!(out, ",{}", s[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StreamOutcome {
    pub report: MetricsReport,
    pub confusion: ConfusionMatrix,
    pub series: AccuracySeries,
    /// Chunks whose training step diverged and was rolled back.
    pub divergent_chunks: usize,
}

/// Chunked test-then-train evaluation.
///
/// The first `bootstrap_size` samples only train the model. The rest of the
/// stream is consumed in chunks: every sample of a chunk is scored before
/// any of them is used for training. A trailing partial chunk is scored and
/// trained like a full one.
pub fn prequential_evaluate(
    classifier: &mut dyn OnlineClassifier,
    stream: &[LabeledSample],
    config: &PrequentialConfig,
) -> Result<StreamOutcome> {
    config.validate()?;
    if stream.len() <= config.bootstrap_size {
        return Err(Error::InsufficientBootstrap {
            required: config.bootstrap_size,
            available: stream.len(),
        });
    }
    let (bootstrap, scored) = stream.split_at(config.bootstrap_size);
    let mut divergent_chunks = 0;
    let mut train =
        |classifier: &mut dyn OnlineClassifier, chunk: &[LabeledSample]| match classifier
            .learn_chunk(chunk)
        {
            Ok(()) => Ok(()),
            Err(Error::Divergence) => {
                log::warn!(
                    "{}: training diverged on a chunk; rolled back",
                    classifier.name()
                );
                divergent_chunks += 1;
                Ok(())
            }
            Err(e) => Err(e),
        };

    for chunk in bootstrap.chunks(config.chunk_size) {
        train(classifier, chunk)?;
    }
    let mut confusion = ConfusionMatrix::default();
    let mut bits = Vec::with_capacity(scored.len());
    for chunk in scored.chunks(config.chunk_size) {
        for s in chunk {
            let p = classifier.predict(&s.features);
            confusion.record(s.label, p.label);
            bits.push(p.label == s.label);
        }
        train(classifier, chunk)?;
    }
    Ok(StreamOutcome {
        report: compute_metrics(&confusion, FarVariant::AsPrinted)?,
        confusion,
        series: AccuracySeries::new(bits, config.sliding_windows.clone()),
        divergent_chunks,
    })
}

/// Scores a frozen model over a whole stream, producing the same series as
/// the prequential protocol but without any training.
pub fn frozen_stream_evaluate(
    model: &dyn OfflineModel,
    stream: &[LabeledSample],
    windows: &[usize],
) -> Result<StreamOutcome> {
    let (confusion, bits) = score(model, stream);
    Ok(StreamOutcome {
        report: compute_metrics(&confusion, FarVariant::AsPrinted)?,
        confusion,
        series: AccuracySeries::new(bits, windows.to_vec()),
        divergent_chunks: 0,
    })
}

fn score(model: &dyn OfflineModel, data: &[LabeledSample]) -> (ConfusionMatrix, Vec<bool>) {
    let mut cm = ConfusionMatrix::default();
    let bits = data
        .iter()
        .map(|s| {
            let p = model.predict(&s.features).label;
            cm.record(s.label, p);
            p == s.label
        })
        .collect();
    (cm, bits)
}

#[derive(Debug, Clone)]
pub struct OfflineOutcome {
    pub report: MetricsReport,
    pub confusion: ConfusionMatrix,
    pub n_train: usize,
    pub n_test: usize,
}

/// Random partition into train/test by `split_fraction`, train on the first
/// part, score the second.
pub fn holdout_evaluate(
    method: &OfflineMethod,
    dataset: &[LabeledSample],
    split_fraction: f64,
    seed: u64,
) -> Result<OfflineOutcome> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((dataset.len() as f64) * split_fraction).round() as usize;
    let train: Vec<LabeledSample> = order[..n_train].iter().map(|&i| dataset[i]).collect();
    let test: Vec<LabeledSample> = order[n_train..].iter().map(|&i| dataset[i]).collect();
    let model = train_offline(method, &train, derive_seed(seed, 1))?;
    let (confusion, _) = score(&model, &test);
    Ok(OfflineOutcome {
        report: compute_metrics(&confusion, FarVariant::AsPrinted)?,
        confusion,
        n_train: train.len(),
        n_test: test.len(),
    })
}

/// Train on all of `train_trace`, test on all of `test_trace`.
pub fn cross_trace_evaluate(
    method: &OfflineMethod,
    train_trace: &[LabeledSample],
    test_trace: &[LabeledSample],
    seed: u64,
) -> Result<OfflineOutcome> {
    let model = train_offline(method, train_trace, seed)?;
    let (confusion, _) = score(&model, test_trace);
    Ok(OfflineOutcome {
        report: compute_metrics(&confusion, FarVariant::AsPrinted)?,
        confusion,
        n_train: train_trace.len(),
        n_test: test_trace.len(),
    })
}
