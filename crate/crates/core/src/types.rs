//! Domain types shared by every module: device feature vectors, client
//! service samples, SLA labels and predictions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number of server device metrics in a [`FeatureVector`].
pub const NUM_FEATURES: usize = 21;

/// Unit class of a device metric, used for range validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// Bounded to `[0, 100]`.
    Percent,
    /// Kilobytes, non-negative.
    Size,
    /// Per-second rate, non-negative.
    Rate,
}

/// The server device metrics, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    CpuIdle,
    CpuUser,
    CpuSystem,
    CpuIowait,
    MemUsed,
    MemCommitted,
    SwapUsed,
    SwapCached,
    IoReadTps,
    IoWriteTps,
    IoBytesRead,
    IoBytesWritten,
    BlockReads,
    BlockWrites,
    ProcNew,
    ContextSwitches,
    NetRxPackets,
    NetTxPackets,
    NetRxKb,
    NetTxKb,
    IfaceUtil,
}

impl Feature {
    pub const ALL: [Feature; NUM_FEATURES] = [
        Feature::CpuIdle,
        Feature::CpuUser,
        Feature::CpuSystem,
        Feature::CpuIowait,
        Feature::MemUsed,
        Feature::MemCommitted,
        Feature::SwapUsed,
        Feature::SwapCached,
        Feature::IoReadTps,
        Feature::IoWriteTps,
        Feature::IoBytesRead,
        Feature::IoBytesWritten,
        Feature::BlockReads,
        Feature::BlockWrites,
        Feature::ProcNew,
        Feature::ContextSwitches,
        Feature::NetRxPackets,
        Feature::NetTxPackets,
        Feature::NetRxKb,
        Feature::NetTxKb,
        Feature::IfaceUtil,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name used in trace files and profiles.
    pub fn name(self) -> &'static str {
        match self {
            Feature::CpuIdle => "cpu_idle",
            Feature::CpuUser => "cpu_user",
            Feature::CpuSystem => "cpu_system",
            Feature::CpuIowait => "cpu_iowait",
            Feature::MemUsed => "mem_used",
            Feature::MemCommitted => "mem_committed",
            Feature::SwapUsed => "swap_used",
            Feature::SwapCached => "swap_cached",
            Feature::IoReadTps => "io_read_tps",
            Feature::IoWriteTps => "io_write_tps",
            Feature::IoBytesRead => "io_bytes_read",
            Feature::IoBytesWritten => "io_bytes_written",
            Feature::BlockReads => "block_reads",
            Feature::BlockWrites => "block_writes",
            Feature::ProcNew => "proc_new",
            Feature::ContextSwitches => "context_switches",
            Feature::NetRxPackets => "net_rx_packets",
            Feature::NetTxPackets => "net_tx_packets",
            Feature::NetRxKb => "net_rx_kb",
            Feature::NetTxKb => "net_tx_kb",
            Feature::IfaceUtil => "iface_util",
        }
    }

    pub fn kind(self) -> FeatureKind {
        match self {
            Feature::CpuIdle
            | Feature::CpuUser
            | Feature::CpuSystem
            | Feature::CpuIowait
            | Feature::IfaceUtil => FeatureKind::Percent,
            Feature::MemUsed | Feature::MemCommitted | Feature::SwapUsed | Feature::SwapCached => {
                FeatureKind::Size
            }
            _ => FeatureKind::Rate,
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Clamp a raw value into the valid range for this metric.
    pub fn clamp(self, value: f64) -> f64 {
        match self.kind() {
            FeatureKind::Percent => value.clamp(0.0, 100.0),
            FeatureKind::Size | FeatureKind::Rate => value.max(0.0),
        }
    }

    fn admits(self, value: f64) -> bool {
        value.is_finite()
            && match self.kind() {
                FeatureKind::Percent => (0.0..=100.0).contains(&value),
                FeatureKind::Size | FeatureKind::Rate => value >= 0.0,
            }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One second of server device statistics.
///
/// Values are stored in [`Feature::ALL`] order. Construction through
/// [`FeatureVector::new`] enforces finiteness and per-kind ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector([f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn new(values: [f64; NUM_FEATURES]) -> Result<Self, Error> {
        for feature in Feature::ALL {
            let v = values[feature.index()];
            if !feature.admits(v) {
                return Err(Error::InvalidFeature {
                    feature: feature.name(),
                    value: v,
                });
            }
        }
        Ok(FeatureVector(values))
    }

    /// Builds a vector by clamping every value into range. Non-finite
    /// values become zero.
    pub fn clamped(mut values: [f64; NUM_FEATURES]) -> Self {
        for feature in Feature::ALL {
            let v = values[feature.index()];
            values[feature.index()] = if v.is_finite() { feature.clamp(v) } else { 0.0 };
        }
        FeatureVector(values)
    }

    pub fn zeros() -> Self {
        FeatureVector([0.0; NUM_FEATURES])
    }

    pub fn get(&self, feature: Feature) -> f64 {
        self.0[feature.index()]
    }

    pub fn values(&self) -> &[f64; NUM_FEATURES] {
        &self.0
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Client-side service metrics for one second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceSample {
    pub timestamp: f64,
    /// Displayed video frames per second.
    pub fps: f64,
    /// Played audio buffers per second.
    pub abs: f64,
}

impl ServiceSample {
    pub fn new(timestamp: f64, fps: f64, abs: f64) -> Result<Self, Error> {
        if !timestamp.is_finite() || !fps.is_finite() || !abs.is_finite() || fps < 0.0 || abs < 0.0
        {
            return Err(Error::InvalidServiceSample {
                timestamp,
                fps,
                abs,
            });
        }
        Ok(ServiceSample {
            timestamp,
            fps,
            abs,
        })
    }
}

/// Binary SLA state. `Violated` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlaLabel {
    Violated,
    Conforming,
}

impl SlaLabel {
    /// Class index used by the learners: conforming = 0, violated = 1.
    pub fn class_index(self) -> usize {
        match self {
            SlaLabel::Conforming => 0,
            SlaLabel::Violated => 1,
        }
    }

    pub fn from_class_index(i: usize) -> Self {
        if i == 1 {
            SlaLabel::Violated
        } else {
            SlaLabel::Conforming
        }
    }

    pub fn is_violated(self) -> bool {
        self == SlaLabel::Violated
    }
}

impl fmt::Display for SlaLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlaLabel::Violated => f.write_str("violated"),
            SlaLabel::Conforming => f.write_str("conforming"),
        }
    }
}

/// A feature vector joined with its SLA label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub timestamp: f64,
    pub features: FeatureVector,
    pub label: SlaLabel,
}

impl LabeledSample {
    pub fn new(timestamp: f64, features: FeatureVector, label: SlaLabel) -> Self {
        LabeledSample {
            timestamp,
            features,
            label,
        }
    }
}

/// Decision threshold applied to posterior scores.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Model output: a hard label plus the posterior probability of `Violated`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: SlaLabel,
    pub score: f64,
}

impl Prediction {
    pub fn from_score(score: f64) -> Self {
        Self::with_threshold(score, DECISION_THRESHOLD)
    }

    pub fn with_threshold(score: f64, threshold: f64) -> Self {
        let score = if score.is_nan() {
            0.5
        } else {
            score.clamp(0.0, 1.0)
        };
        let label = if score >= threshold {
            SlaLabel::Violated
        } else {
            SlaLabel::Conforming
        };
        Prediction { label, score }
    }
}
