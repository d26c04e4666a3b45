use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::evaluation::PrequentialConfig;
use crate::labeling::SloThresholds;
use crate::learners::{
    BatchLogisticConfig, CartConfig, HoeffdingTreeConfig, OaueConfig, OfflineMethod, OnlineMethod,
    RandomForestConfig, SgdLogisticConfig,
};
use crate::tracegen::{LoadShape, TestbedProfile};

/// Seconds, written as a bare number or with an `s`, `m` or `h` suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Duration(pub u64);

impl Duration {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (num, mult) = match s.char_indices().last() {
            Some((i, 'h')) => (&s[..i], 3600),
            Some((i, 'm')) => (&s[..i], 60),
            Some((i, 's')) => (&s[..i], 1),
            _ => (s, 1),
        };
        let v: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("invalid duration {s:?}")))?;
        let secs = v * mult as f64;
        if !(secs >= 0.0 && secs.is_finite() && secs.fract() == 0.0) {
            return Err(Error::InvalidConfig(format!("invalid duration {s:?}")));
        }
        Ok(Duration(secs as u64))
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            s if s > 0 && s % 3600 == 0 => write!(f, "{}h", s / 3600),
            s if s > 0 && s % 60 == 0 => write!(f, "{}m", s / 60),
            s => write!(f, "{s}s"),
        }
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Secs(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Secs(s) => Ok(Duration(s)),
            Raw::Text(t) => Duration::parse(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// A load pattern by name or with explicit parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatternSpec {
    Named(PatternName),
    Custom(LoadShape),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternName {
    Periodic,
    #[serde(alias = "flash_crowd")]
    Flashcrowd,
}

impl PatternSpec {
    pub fn shape(&self) -> LoadShape {
        match self {
            PatternSpec::Named(PatternName::Periodic) => LoadShape::periodic(),
            PatternSpec::Named(PatternName::Flashcrowd) => LoadShape::flash_crowd(),
            PatternSpec::Custom(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum TraceSource {
    Generated {
        pattern: PatternSpec,
        /// Built-in profile name or path to a profile JSON file.
        profile: String,
        duration: Duration,
        /// Derived from the global seed and the trace name when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub name: String,
    #[serde(flatten)]
    pub source: TraceSource,
}

/// A trace formed by appending other traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatSpec {
    pub name: String,
    pub parts: Vec<String>,
}

/// Any learner, tagged by `method`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Learner {
    Logistic(#[serde(default)] BatchLogisticConfig),
    Cart(#[serde(default)] CartConfig),
    RandomForest(#[serde(default)] RandomForestConfig),
    SgdLogistic(#[serde(default)] SgdLogisticConfig),
    HoeffdingTree(#[serde(default)] HoeffdingTreeConfig),
    Oaue(#[serde(default)] OaueConfig),
}

impl Learner {
    pub fn name(&self) -> &'static str {
        match self.offline() {
            Some(m) => m.name(),
            None => self
                .online()
                .expect("every learner is online or offline")
                .name(),
        }
    }

    pub fn offline(&self) -> Option<OfflineMethod> {
        Some(match self {
            Learner::Logistic(c) => OfflineMethod::Logistic(c.clone()),
            Learner::Cart(c) => OfflineMethod::Cart(c.clone()),
            Learner::RandomForest(c) => OfflineMethod::RandomForest(c.clone()),
            _ => return None,
        })
    }

    pub fn online(&self) -> Option<OnlineMethod> {
        Some(match self {
            Learner::SgdLogistic(c) => OnlineMethod::SgdLogistic(c.clone()),
            Learner::HoeffdingTree(c) => OnlineMethod::HoeffdingTree(c.clone()),
            Learner::Oaue(c) => OnlineMethod::Oaue(c.clone()),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Holdout,
    CrossTrace,
    Prequential,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Holdout => "holdout",
            Protocol::CrossTrace => "cross_trace",
            Protocol::Prequential => "prequential",
        }
    }
}

/// One learner under one protocol, applied to every listed trace or pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub learner: Learner,
    pub protocol: Protocol,
    /// Holdout and prequential targets.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<String>,
    /// Cross-trace `[train, test]` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<[String; 2]>,
}

fn default_seed() -> u64 {
    1
}
fn default_split() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory; the command line may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub slo: SloThresholds,
    pub traces: Vec<TraceSpec>,
    #[serde(default)]
    pub concat: Vec<ConcatSpec>,
    pub runs: Vec<RunSpec>,
    #[serde(default)]
    pub prequential: PrequentialConfig,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&s)?;
        // trace files are relative to the config file
        let base = path.parent().unwrap_or(std::path::Path::new(""));
        for t in &mut cfg.traces {
            if let TraceSource::File { path } = &mut t.source {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        Ok(cfg)
    }

    /// Structural checks that need no trace data.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.runs.is_empty() {
            return bad("no runs configured".into());
        }
        self.slo.validate()?;
        self.prequential.validate()?;
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!(
                "split_fraction {} not in (0, 1)",
                self.split_fraction
            ));
        }
        let mut names = BTreeSet::new();
        for t in &self.traces {
            if !valid_name(&t.name) {
                return bad(format!("invalid trace name {:?}", t.name));
            }
            if !names.insert(t.name.as_str()) {
                return bad(format!("duplicate trace name {:?}", t.name));
            }
            if let TraceSource::Generated {
                pattern, profile, ..
            } = &t.source
            {
                crate::tracegen::LoadPattern::new(pattern.shape(), 0, 0).validate()?;
                TestbedProfile::resolve(profile)?;
            }
        }
        for c in &self.concat {
            if !valid_name(&c.name) {
                return bad(format!("invalid trace name {:?}", c.name));
            }
            if c.parts.is_empty() {
                return bad(format!("concat {:?} has no parts", c.name));
            }
            for p in &c.parts {
                if !names.contains(p.as_str()) {
                    return bad(format!("concat {:?}: unknown trace {p:?}", c.name));
                }
            }
            if !names.insert(c.name.as_str()) {
                return bad(format!("duplicate trace name {:?}", c.name));
            }
        }
        for (i, r) in self.runs.iter().enumerate() {
            let what = format!("run {i} ({} / {})", r.learner.name(), r.protocol.name());
            let compatible = match r.protocol {
                Protocol::Prequential => r.learner.online().is_some(),
                Protocol::Holdout | Protocol::CrossTrace => r.learner.offline().is_some(),
            };
            if !compatible {
                return bad(format!("{what}: learner does not support this protocol"));
            }
            let targets: Vec<&String> = match r.protocol {
                Protocol::CrossTrace => {
                    if r.pairs.is_empty() || !r.traces.is_empty() {
                        return bad(format!("{what}: cross_trace needs `pairs` only"));
                    }
                    r.pairs.iter().flatten().collect()
                }
                _ => {
                    if r.traces.is_empty() || !r.pairs.is_empty() {
                        return bad(format!("{what}: needs `traces` only"));
                    }
                    r.traces.iter().collect()
                }
            };
            if let Some(t) = targets.iter().find(|t| !names.contains(t.as_str())) {
                return bad(format!("{what}: unknown trace {t:?}"));
            }
        }
        Ok(())
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '+'))
        && !s.starts_with('.')
}
