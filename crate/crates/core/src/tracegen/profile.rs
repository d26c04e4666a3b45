//! Testbed profiles: how active sessions map to device and service metrics.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Feature, NUM_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseShape {
    /// `base + slope·n`
    Linear,
    /// `base + slope·C·u/(1+u)`
    Saturating,
    /// `base / (1 + slope·n)`
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub base: f64,
    pub slope: f64,
    pub shape: ResponseShape,
    /// Coefficient of variation of the multiplicative noise.
    #[serde(default)]
    pub noise_cv: f64,
}

impl ResponseCurve {
    /// Noise-free response to `n` active sessions on a server of `capacity`.
    pub fn mean_response(&self, n: f64, capacity: f64) -> f64 {
        match self.shape {
            ResponseShape::Linear => self.base + self.slope * n,
            ResponseShape::Saturating => {
                let u = n / capacity;
                self.base + self.slope * capacity * u / (1.0 + u)
            }
            ResponseShape::Inverse => self.base / (1.0 + self.slope * n),
        }
    }

    /// Response with mean-preserving lognormal noise.
    pub fn sample<R: Rng + ?Sized>(&self, n: f64, capacity: f64, rng: &mut R) -> f64 {
        let mean = self.mean_response(n, capacity);
        if self.noise_cv == 0.0 {
            return mean;
        }
        let sigma = (1.0 + self.noise_cv * self.noise_cv).ln().sqrt();
        let z: f64 = StandardNormal.sample(rng);
        mean * (sigma * z - 0.5 * sigma * sigma).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceMode {
    pub mean: f64,
    pub sd: f64,
}

impl ServiceMode {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sd == 0.0 {
            return self.mean.max(0.0);
        }
        Normal::new(self.mean, self.sd)
            .expect("validated sd")
            .sample(rng)
            .max(0.0)
    }
}

fn default_capacity() -> f64 {
    60.0
}
fn default_steepness() -> f64 {
    8.0
}
fn fps_conforming() -> ServiceMode {
    ServiceMode {
        mean: 25.0,
        sd: 1.0,
    }
}
fn fps_violated() -> ServiceMode {
    ServiceMode {
        mean: 12.0,
        sd: 3.0,
    }
}
fn abs_conforming() -> ServiceMode {
    ServiceMode {
        mean: 30.0,
        sd: 2.0,
    }
}
fn abs_violated() -> ServiceMode {
    ServiceMode {
        mean: 10.0,
        sd: 3.0,
    }
}

/// Load-to-metrics mapping of a simulated testbed.
///
/// Every feature has a response curve; `capacity` and
/// `degradation_steepness` control when the service flips into its
/// degraded mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestbedProfile {
    pub id: String,
    #[serde(default = "default_capacity")]
    pub capacity: f64,
    #[serde(default = "default_steepness")]
    pub degradation_steepness: f64,
    /// Keyed by feature name.
    pub features: BTreeMap<String, ResponseCurve>,
    #[serde(default = "fps_conforming")]
    pub fps_conforming: ServiceMode,
    #[serde(default = "fps_violated")]
    pub fps_violated: ServiceMode,
    #[serde(default = "abs_conforming")]
    pub abs_conforming: ServiceMode,
    #[serde(default = "abs_violated")]
    pub abs_violated: ServiceMode,
    #[serde(default)]
    pub seed: u64,
}

const BUILTIN: &[(&str, &str)] = &[
    ("profile-a", include_str!("../../profiles/profile-a.json")),
    ("profile-b", include_str!("../../profiles/profile-b.json")),
];

/// Degraded-mode threshold the service modes must straddle.
const FPS_SLO_REFERENCE: f64 = 20.0;

impl TestbedProfile {
    /// Names accepted by [`TestbedProfile::builtin`].
    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let (_, json) = BUILTIN.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown profile {name:?} (built-in: {})",
                Self::builtin_names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        Self::from_json(json)
    }

    /// The default drift-free profile.
    pub fn default_profile() -> Self {
        Self::builtin("profile-a").expect("bundled profile parses")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    /// Built-in name or path to a JSON file.
    pub fn resolve(spec: &str) -> Result<Self> {
        if BUILTIN.iter().any(|(n, _)| *n == spec) {
            Self::builtin(spec)
        } else {
            Self::load(Path::new(spec))
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("profile {:?}: {m}", self.id)));
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return bad("capacity must be positive".into());
        }
        if !(self.degradation_steepness >= 0.0 && self.degradation_steepness.is_finite()) {
            return bad("degradation_steepness must be non-negative".into());
        }
        for name in self.features.keys() {
            if Feature::from_name(name).is_none() {
                return bad(format!("unknown feature {name:?}"));
            }
        }
        for f in Feature::ALL {
            let Some(c) = self.features.get(f.name()) else {
                return bad(format!("missing response curve for {}", f.name()));
            };
            if !(c.base.is_finite() && c.slope.is_finite()) {
                return bad(format!("{}: non-finite coefficients", f.name()));
            }
            if !(c.noise_cv >= 0.0 && c.noise_cv.is_finite()) {
                return bad(format!("{}: noise_cv must be >= 0", f.name()));
            }
            if c.shape == ResponseShape::Inverse && c.slope < 0.0 {
                return bad(format!("{}: inverse slope must be >= 0", f.name()));
            }
        }
        for (label, m) in [
            ("fps_conforming", self.fps_conforming),
            ("fps_violated", self.fps_violated),
            ("abs_conforming", self.abs_conforming),
            ("abs_violated", self.abs_violated),
        ] {
            if !(m.mean.is_finite() && m.sd >= 0.0 && m.sd.is_finite()) {
                return bad(format!("{label}: invalid mode"));
            }
        }
        if !(self.fps_conforming.mean > FPS_SLO_REFERENCE
            && FPS_SLO_REFERENCE > self.fps_violated.mean)
        {
            return bad("fps modes must straddle the SLO threshold of 20".into());
        }
        Ok(())
    }

    /// Probability that the service is in its degraded mode at utilization `u`.
    pub fn violation_probability(&self, u: f64) -> f64 {
        crate::learners::sigmoid(self.degradation_steepness * (u - 1.0))
    }

    /// Response curves in canonical feature order.
    pub(crate) fn curves(&self) -> [&ResponseCurve; NUM_FEATURES] {
        Feature::ALL.map(|f| &self.features[f.name()])
    }

    pub(crate) fn sample_service<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> (f64, f64) {
        let degraded = rng.random::<f64>() < self.violation_probability(u);
        if degraded {
            (self.fps_violated.sample(rng), self.abs_violated.sample(rng))
        } else {
            (
                self.fps_conforming.sample(rng),
                self.abs_conforming.sample(rng),
            )
        }
    }
}
