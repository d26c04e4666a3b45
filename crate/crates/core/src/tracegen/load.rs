//! Client arrival processes and the birth–death session simulator.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Arrival-rate shape, rates in clients per minute, times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadShape {
    /// `base + amplitude · sin(2πt / period)`.
    Periodic {
        base_rate: f64,
        amplitude: f64,
        period: f64,
    },
    /// Base rate with randomly timed ramp-up / sustain / ramp-down spikes.
    FlashCrowd {
        base_rate: f64,
        events_per_hour: f64,
        peak_rate: f64,
        ramp_up: f64,
        sustain: f64,
        ramp_down: f64,
    },
    Constant {
        rate: f64,
    },
}

impl LoadShape {
    pub fn periodic() -> Self {
        LoadShape::Periodic {
            base_rate: 30.0,
            amplitude: 20.0,
            period: 3600.0,
        }
    }

    pub fn flash_crowd() -> Self {
        LoadShape::FlashCrowd {
            base_rate: 5.0,
            events_per_hour: 10.0,
            peak_rate: 50.0,
            ramp_up: 60.0,
            sustain: 60.0,
            ramp_down: 240.0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LoadShape::Periodic { .. } => "periodic",
            LoadShape::FlashCrowd { .. } => "flashcrowd",
            LoadShape::Constant { .. } => "constant",
        }
    }

    fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let ok = match *self {
            LoadShape::Periodic {
                base_rate,
                amplitude,
                period,
            } => pos(base_rate) && amplitude >= 0.0 && amplitude < base_rate && pos(period),
            LoadShape::FlashCrowd {
                base_rate,
                events_per_hour,
                peak_rate,
                ramp_up,
                sustain,
                ramp_down,
            } => {
                pos(base_rate)
                    && pos(events_per_hour)
                    && pos(peak_rate)
                    && peak_rate >= base_rate
                    && ramp_up >= 0.0
                    && sustain >= 0.0
                    && ramp_down >= 0.0
            }
            LoadShape::Constant { rate } => pos(rate),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid load shape {self:?}")))
        }
    }
}

/// A load process: shape, session holding time and run length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadPattern {
    pub shape: LoadShape,
    /// Mean of the exponential session lifetime, seconds.
    #[serde(default = "default_holding")]
    pub holding_time_mean: f64,
    /// Seconds.
    pub duration: u64,
    pub seed: u64,
}

fn default_holding() -> f64 {
    60.0
}

impl LoadPattern {
    pub fn new(shape: LoadShape, duration: u64, seed: u64) -> Self {
        LoadPattern {
            shape,
            holding_time_mean: default_holding(),
            duration,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if !(self.holding_time_mean > 0.0 && self.holding_time_mean.is_finite()) {
            return Err(Error::InvalidConfig(
                "holding_time_mean must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Fixes the random parts of the shape (flash event times).
    pub fn schedule(&self) -> LoadSchedule {
        let mut events = Vec::new();
        if let LoadShape::FlashCrowd {
            events_per_hour, ..
        } = self.shape
        {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 0));
            let gap = Exp::new(events_per_hour / 3600.0).expect("validated positive rate");
            let mut t: f64 = gap.sample(&mut rng);
            while t < self.duration as f64 {
                events.push(t);
                t += gap.sample(&mut rng);
            }
        }
        LoadSchedule {
            shape: self.shape.clone(),
            event_starts: events,
        }
    }
}

/// A load shape with its flash events drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSchedule {
    shape: LoadShape,
    event_starts: Vec<f64>,
}

impl LoadSchedule {
    pub fn with_events(shape: LoadShape, mut event_starts: Vec<f64>) -> Self {
        event_starts.sort_by(f64::total_cmp);
        LoadSchedule {
            shape,
            event_starts,
        }
    }

    pub fn event_starts(&self) -> &[f64] {
        &self.event_starts
    }

    /// Clients per minute at time `t` seconds. Overlapping flash events
    /// combine by pointwise maximum.
    pub fn arrival_rate(&self, t: f64) -> f64 {
        match self.shape {
            LoadShape::Periodic {
                base_rate,
                amplitude,
                period,
            } => base_rate + amplitude * (std::f64::consts::TAU * t / period).sin(),
            LoadShape::Constant { rate } => rate,
            LoadShape::FlashCrowd {
                base_rate,
                peak_rate,
                ramp_up,
                sustain,
                ramp_down,
                ..
            } => {
                let span = ramp_up + sustain + ramp_down;
                let first = self.event_starts.partition_point(|&s| s <= t - span);
                let last = self.event_starts.partition_point(|&s| s <= t);
                self.event_starts[first..last]
                    .iter()
                    .map(|&s| {
                        let tau = t - s;
                        if tau < ramp_up {
                            base_rate + (peak_rate - base_rate) * tau / ramp_up
                        } else if tau < ramp_up + sustain {
                            peak_rate
                        } else {
                            peak_rate
                                - (peak_rate - base_rate) * (tau - ramp_up - sustain) / ramp_down
                        }
                    })
                    .fold(base_rate, f64::max)
            }
        }
    }
}

/// Arrival rate of `pattern` at `t`, drawing flash events from its seed.
pub fn arrival_rate(pattern: &LoadPattern, t: f64) -> f64 {
    pattern.schedule().arrival_rate(t)
}

#[derive(Debug)]
struct Departure(f64);

impl PartialEq for Departure {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Departure {}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Departure {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Active sessions at the end of every second.
///
/// Arrivals in second `t` are Poisson with mean `rate(t)/60`, placed
/// uniformly inside the second; each session lives an exponential time
/// with mean `holding_time_mean`.
pub fn simulate_sessions(pattern: &LoadPattern) -> Vec<u32> {
    let schedule = pattern.schedule();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(pattern.seed, 1));
    let lifetime = Exp::new(1.0 / pattern.holding_time_mean).expect("validated holding time");
    let mut alive: BinaryHeap<Reverse<Departure>> = BinaryHeap::new();
    let mut out = Vec::with_capacity(pattern.duration as usize);
    for t in 0..pattern.duration {
        let t = t as f64;
        let mean = schedule.arrival_rate(t).max(0.0) / 60.0;
        let arrivals = if mean > 0.0 {
            Poisson::new(mean).expect("positive mean").sample(&mut rng) as u64
        } else {
            0
        };
        for _ in 0..arrivals {
            let start = t + rng.random::<f64>();
            alive.push(Reverse(Departure(start + lifetime.sample(&mut rng))));
        }
        while alive.peek().is_some_and(|d| d.0 .0 <= t + 1.0) {
            alive.pop();
        }
        out.push(alive.len() as u32);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn periodic_reference_points() {
        let p = LoadPattern::new(LoadShape::periodic(), 3600, 1);
        assert_abs_diff_eq!(arrival_rate(&p, 0.0), 30.0, epsilon = 1e-12);
        assert_abs_diff_eq!(arrival_rate(&p, 900.0), 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(arrival_rate(&p, 2700.0), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn flash_event_profile() {
        let s = LoadSchedule::with_events(LoadShape::flash_crowd(), vec![100.0]);
        assert_abs_diff_eq!(s.arrival_rate(50.0), 5.0);
        assert_abs_diff_eq!(s.arrival_rate(130.0), 27.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.arrival_rate(160.0), 50.0);
        assert_abs_diff_eq!(s.arrival_rate(219.0), 50.0);
        // 120 s into the 240 s ramp-down
        assert_abs_diff_eq!(s.arrival_rate(340.0), 27.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.arrival_rate(460.0), 5.0);
        assert_abs_diff_eq!(s.arrival_rate(1000.0), 5.0);
    }

    #[test]
    fn overlapping_events_take_max() {
        let s = LoadSchedule::with_events(LoadShape::flash_crowd(), vec![0.0, 200.0]);
        // event 1 ramping down at 230 s (110 s in: 50 - 45·110/240), event 2 ramping up at 30 s in
        let down: f64 = 50.0 - 45.0 * 110.0 / 240.0;
        assert_abs_diff_eq!(s.arrival_rate(230.0), down.max(27.5), epsilon = 1e-12);
        assert_abs_diff_eq!(s.arrival_rate(260.0), 50.0, epsilon = 1e-12);
    }

    #[test]
    fn flash_events_follow_rate() {
        let p = LoadPattern::new(LoadShape::flash_crowd(), 100 * 3600, 3);
        let n = p.schedule().event_starts().len() as f64;
        // Poisson(1000): ±4 sd
        assert!((n - 1000.0).abs() < 4.0 * 1000f64.sqrt(), "{n} events");
    }

    #[test]
    fn mm_infinity_mean() {
        for seed in 0..3 {
            let p = LoadPattern::new(LoadShape::Constant { rate: 30.0 }, 10_000, seed);
            let n = simulate_sessions(&p);
            let mean = n[300..].iter().map(|&x| x as f64).sum::<f64>() / (n.len() - 300) as f64;
            assert!((mean - 30.0).abs() <= 1.5, "seed {seed}: mean {mean}");
        }
    }

    #[test]
    fn zero_duration_and_determinism() {
        let p = LoadPattern::new(LoadShape::periodic(), 0, 1);
        assert!(simulate_sessions(&p).is_empty());
        let p = LoadPattern::new(LoadShape::flash_crowd(), 2000, 9);
        assert_eq!(simulate_sessions(&p), simulate_sessions(&p));
    }

    #[test]
    fn rejects_negative_rates() {
        let bad = LoadPattern::new(
            LoadShape::Periodic {
                base_rate: 10.0,
                amplitude: 20.0,
                period: 60.0,
            },
            10,
            1,
        );
        assert!(bad.validate().is_err());
        assert!(LoadPattern::new(LoadShape::periodic(), 10, 1)
            .validate()
            .is_ok());
    }

    proptest! {
        #[test]
        fn periodic_repeats_every_hour(t in 0.0f64..100_000.0) {
            let s = LoadPattern::new(LoadShape::periodic(), 1, 0).schedule();
            prop_assert!((s.arrival_rate(t) - s.arrival_rate(t + 3600.0)).abs() < 1e-9);
            prop_assert!(s.arrival_rate(t) >= 10.0 - 1e-9);
        }
    }
}
