//! Stream mining toolkit for predicting client-side SLA violations of a
//! video-on-demand service from server device statistics.
//!
//! The crate covers label derivation ([`labeling`]), online and offline
//! learners ([`learners`]), holdout and prequential evaluation
//! ([`evaluation`]), synthetic load and trace generation ([`tracegen`]), and
//! the experiment runner behind the command-line tool ([`experiment`]).

pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod labeling;
pub mod learners;
pub mod metrics;
pub mod seed;
pub mod tracegen;
pub mod types;

pub use error::{Error, Result};
pub use labeling::SloThresholds;
pub use metrics::{compute_metrics, ConfusionMatrix, FarVariant, MetricsReport};
pub use types::{
    Feature, FeatureVector, LabeledSample, Prediction, ServiceSample, SlaLabel, NUM_FEATURES,
};
