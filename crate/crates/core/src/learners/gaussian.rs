use libm::erf;
use serde::{Deserialize, Serialize};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Running mean/variance (Welford) with observed range.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianEstimator {
    weight: f64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl GaussianEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        if self.weight == 0.0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.weight += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.weight;
        self.m2 += delta * (x - self.mean);
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance; zero with fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.weight > 1.0 {
            (self.m2 / (self.weight - 1.0)).max(0.0)
        } else {
            0.0
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Observed range, `None` when empty.
    pub fn range(&self) -> Option<(f64, f64)> {
        (self.weight > 0.0).then_some((self.min, self.max))
    }

    /// Standard deviation floored so densities stay finite for degenerate
    /// (constant or single-observation) summaries.
    fn effective_std(&self) -> f64 {
        self.std_dev().max(1e-6 * (1.0 + self.mean.abs()))
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let s = self.effective_std();
        let z = (x - self.mean) / s;
        -0.5 * z * z - s.ln() - LN_SQRT_2PI
    }

    /// Estimated fraction of the observed mass at or below `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.weight == 0.0 {
            return 0.0;
        }
        if x < self.min {
            return 0.0;
        }
        if x >= self.max {
            return 1.0;
        }
        let s = self.std_dev();
        if s == 0.0 {
            return if x >= self.mean { 1.0 } else { 0.0 };
        }
        0.5 * (1.0 + erf((x - self.mean) / (s * std::f64::consts::SQRT_2)))
    }
}
