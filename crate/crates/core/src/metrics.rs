//! Confusion accounting and the five classification metrics.
//!
//! The positive class is [`SlaLabel::Violated`]. A ratio whose denominator
//! is zero is reported as `None` ("undefined") rather than 0 or NaN.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::SlaLabel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    pub fn record(&mut self, actual: SlaLabel, predicted: SlaLabel) {
        match (actual, predicted) {
            (SlaLabel::Violated, SlaLabel::Violated) => self.tp += 1,
            (SlaLabel::Violated, SlaLabel::Conforming) => self.fn_ += 1,
            (SlaLabel::Conforming, SlaLabel::Violated) => self.fp += 1,
            (SlaLabel::Conforming, SlaLabel::Conforming) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// Which definition of the false alarm rate is reported as `far`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarVariant {
    /// `fn / (fn + tp)`, the definition as printed alongside the other metrics.
    #[default]
    AsPrinted,
    /// Conventional false-positive rate `fp / (fp + tn)`.
    Fpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ca: f64,
    pub ba: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub far_as_printed: Option<f64>,
    pub far_fpr: Option<f64>,
    pub far_variant: FarVariant,
}

impl MetricsReport {
    /// False alarm rate under the selected variant.
    pub fn far(&self) -> Option<f64> {
        match self.far_variant {
            FarVariant::AsPrinted => self.far_as_printed,
            FarVariant::Fpr => self.far_fpr,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(cm: &ConfusionMatrix, far_variant: FarVariant) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let ca = cm.correct() as f64 / total as f64;
    let tpr = ratio(cm.tp, cm.tp + cm.fn_);
    let tnr = ratio(cm.tn, cm.tn + cm.fp);
    let ba = match (tpr, tnr) {
        (Some(p), Some(n)) => Some((p + n) / 2.0),
        _ => None,
    };
    Ok(MetricsReport {
        ca,
        ba,
        tpr,
        tnr,
        far_as_printed: ratio(cm.fn_, cm.fn_ + cm.tp),
        far_fpr: ratio(cm.fp, cm.fp + cm.tn),
        far_variant,
    })
}

/// Formats an optional metric with three decimals, or `undefined`.
pub struct MetricDisplay(pub Option<f64>);

impl fmt::Display for MetricDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v:.3}"),
            None => f.write_str("undefined"),
        }
    }
}
