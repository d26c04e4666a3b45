//! SLA label derivation from client service metrics and alignment of the
//! server and client streams.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FeatureVector, LabeledSample, ServiceSample, SlaLabel};

/// Maximum distance between a device sample and the service sample it is
/// paired with, in seconds.
pub const JOIN_TOLERANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SloThresholds {
    pub fps_threshold: f64,
    pub abs_threshold: f64,
    pub use_abs: bool,
}

impl Default for SloThresholds {
    fn default() -> Self {
        SloThresholds {
            fps_threshold: 20.0,
            abs_threshold: 20.0,
            use_abs: false,
        }
    }
}

impl SloThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.fps_threshold) || !ok(self.abs_threshold) {
            return Err(Error::InvalidConfig(format!(
                "SLO thresholds must be positive (fps={}, abs={})",
                self.fps_threshold, self.abs_threshold
            )));
        }
        Ok(())
    }
}

/// The SLA is violated when any enabled SLO falls below its threshold.
pub fn evaluate_sla(sample: &ServiceSample, th: &SloThresholds) -> SlaLabel {
    let fps_violated = sample.fps < th.fps_threshold;
    let abs_violated = th.use_abs && sample.abs < th.abs_threshold;
    if fps_violated || abs_violated {
        SlaLabel::Violated
    } else {
        SlaLabel::Conforming
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JoinOutcome {
    pub samples: Vec<LabeledSample>,
    /// Device samples with no service sample within tolerance.
    pub dropped: usize,
}

/// Pairs each device sample with the nearest unconsumed service sample
/// within [`JOIN_TOLERANCE`]. Matching is monotone: a service sample is
/// used at most once and matches never cross. Equidistant candidates
/// resolve to the earlier service sample.
///
/// Both inputs must be sorted by timestamp.
pub fn join_streams(
    device: &[(f64, FeatureVector)],
    service: &[ServiceSample],
    th: &SloThresholds,
) -> JoinOutcome {
    if device.is_empty() || service.is_empty() {
        log::warn!(
            "join_streams: empty input ({} device, {} service samples)",
            device.len(),
            service.len()
        );
        return JoinOutcome {
            samples: Vec::new(),
            dropped: device.len(),
        };
    }

    let pairs = match_indices(
        device.iter().map(|d| d.0),
        &service.iter().map(|s| s.timestamp).collect::<Vec<_>>(),
    );
    let samples: Vec<LabeledSample> = pairs
        .into_iter()
        .map(|(i, j)| {
            let (t, features) = device[i];
            LabeledSample::new(t, features, evaluate_sla(&service[j], th))
        })
        .collect();
    let dropped = device.len() - samples.len();
    if dropped > 0 {
        log::debug!("join_streams: dropped {dropped} unmatched device samples");
    }
    JoinOutcome { samples, dropped }
}

/// Two-pointer matching returning `(device index, service index)` pairs.
fn match_indices(device: impl Iterator<Item = f64>, service: &[f64]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut next = 0usize;
    for (i, t) in device.enumerate() {
        while next < service.len() && t - service[next] > JOIN_TOLERANCE {
            next += 1;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut j = next;
        while j < service.len() && service[j] - t <= JOIN_TOLERANCE {
            let d = (service[j] - t).abs();
            if d <= JOIN_TOLERANCE && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
            j += 1;
        }
        if let Some((j, _)) = best {
            pairs.push((i, j));
            next = j + 1;
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn svc(t: f64, fps: f64) -> ServiceSample {
        ServiceSample::new(t, fps, 30.0).unwrap()
    }

    fn dev(ts: &[f64]) -> Vec<(f64, FeatureVector)> {
        ts.iter().map(|&t| (t, FeatureVector::zeros())).collect()
    }

    #[test]
    fn sla_thresholds() {
        let th = SloThresholds {
            use_abs: true,
            ..Default::default()
        };
        let s = ServiceSample::new(0.0, 25.0, 25.0).unwrap();
        assert_eq!(evaluate_sla(&s, &th), SlaLabel::Conforming);

        let th = SloThresholds::default();
        let s = ServiceSample::new(0.0, 19.0, 25.0).unwrap();
        assert_eq!(evaluate_sla(&s, &th), SlaLabel::Violated);

        let s = ServiceSample::new(0.0, 25.0, 10.0).unwrap();
        assert_eq!(evaluate_sla(&s, &th), SlaLabel::Conforming);
        let with_abs = SloThresholds {
            use_abs: true,
            ..th
        };
        assert_eq!(evaluate_sla(&s, &with_abs), SlaLabel::Violated);
    }

    #[test]
    fn threshold_is_strict() {
        let s = ServiceSample::new(0.0, 20.0, 20.0).unwrap();
        let th = SloThresholds {
            use_abs: true,
            ..Default::default()
        };
        assert_eq!(evaluate_sla(&s, &th), SlaLabel::Conforming);
    }

    #[test]
    fn invalid_thresholds_rejected() {
        let th = SloThresholds {
            fps_threshold: 0.0,
            ..Default::default()
        };
        assert!(th.validate().is_err());
    }

    #[test]
    fn exact_alignment() {
        let out = join_streams(
            &dev(&[1.0, 2.0, 3.0]),
            &[svc(1.0, 25.0), svc(2.0, 10.0), svc(3.0, 25.0)],
            &SloThresholds::default(),
        );
        assert_eq!(out.samples.len(), 3);
        assert_eq!(out.dropped, 0);
        assert_eq!(out.samples[1].label, SlaLabel::Violated);
    }

    #[test]
    fn gap_drops_device_sample() {
        let out = join_streams(
            &dev(&[1.0, 2.0, 3.0]),
            &[svc(1.0, 25.0), svc(3.0, 25.0)],
            &SloThresholds::default(),
        );
        assert_eq!(out.samples.len(), 2);
        assert_eq!(out.dropped, 1);
        assert_eq!(out.samples[1].timestamp, 3.0);
    }

    #[test]
    fn within_tolerance() {
        let out = join_streams(&dev(&[1.0]), &[svc(1.4, 25.0)], &SloThresholds::default());
        assert_eq!(out.samples.len(), 1);
        let out = join_streams(&dev(&[1.0]), &[svc(1.6, 25.0)], &SloThresholds::default());
        assert_eq!(out.samples.len(), 0);
        assert_eq!(out.dropped, 1);
    }

    #[test]
    fn tie_goes_to_earlier_service_sample() {
        let out = join_streams(
            &dev(&[1.0]),
            &[svc(0.75, 10.0), svc(1.25, 25.0)],
            &SloThresholds::default(),
        );
        assert_eq!(out.samples[0].label, SlaLabel::Violated);
    }

    #[test]
    fn empty_inputs() {
        let out = join_streams(&[], &[svc(1.0, 25.0)], &SloThresholds::default());
        assert!(out.samples.is_empty());
        let out = join_streams(&dev(&[1.0]), &[], &SloThresholds::default());
        assert!(out.samples.is_empty());
        assert_eq!(out.dropped, 1);
    }

    /// O(n·m) reference: for each device sample scan every service sample
    /// after the last one consumed.
    fn brute_force_join(device: &[f64], service: &[f64]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut consumed: Option<usize> = None;
        for (i, &t) in device.iter().enumerate() {
            let start = consumed.map_or(0, |c| c + 1);
            let mut best: Option<usize> = None;
            for (j, &s) in service.iter().enumerate().skip(start) {
                let d = (s - t).abs();
                if d > JOIN_TOLERANCE {
                    continue;
                }
                match best {
                    Some(b) if (service[b] - t).abs() <= d => {}
                    _ => best = Some(j),
                }
            }
            if let Some(b) = best {
                out.push((i, b));
                consumed = Some(b);
            }
        }
        out
    }

    fn sorted_times(v: Vec<u16>) -> Vec<f64> {
        let mut ts: Vec<f64> = v.into_iter().map(|x| x as f64 / 10.0).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            d in prop::collection::vec(0u16..300, 0..40),
            s in prop::collection::vec(0u16..300, 0..40),
        ) {
            let dts = sorted_times(d);
            let sts = sorted_times(s);
            let expected = brute_force_join(&dts, &sts);
            prop_assert_eq!(match_indices(dts.iter().copied(), &sts), expected.clone());

            let service: Vec<ServiceSample> = sts.iter().map(|&t| svc(t, 25.0)).collect();
            let out = join_streams(&dev(&dts), &service, &SloThresholds::default());
            prop_assert_eq!(out.samples.len(), expected.len());
            prop_assert!(out.samples.len() <= dts.len().min(service.len()));
            prop_assert_eq!(out.dropped, dts.len() - out.samples.len());
            for s in &out.samples {
                prop_assert!(dts.contains(&s.timestamp));
            }
        }

        #[test]
        fn lowering_fps_never_clears_violation(fps in 0.0f64..60.0, drop in 0.0f64..60.0, abs in 0.0f64..60.0, use_abs: bool) {
            let th = SloThresholds { use_abs, ..Default::default() };
            let hi = evaluate_sla(&ServiceSample::new(0.0, fps, abs).unwrap(), &th);
            let lo = evaluate_sla(&ServiceSample::new(0.0, (fps - drop).max(0.0), abs).unwrap(), &th);
            if hi == SlaLabel::Violated {
                prop_assert_eq!(lo, SlaLabel::Violated);
            }
        }
    }
}
