use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::load::{simulate_sessions, LoadPattern};
use super::profile::TestbedProfile;
use crate::error::{Error, Result};
use crate::labeling::{evaluate_sla, SloThresholds};
use crate::seed::derive_seed;
use crate::types::{FeatureVector, LabeledSample, ServiceSample, SlaLabel, NUM_FEATURES};

/// One second of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub timestamp: f64,
    pub features: FeatureVector,
    pub fps: f64,
    pub abs: f64,
    pub sessions: u32,
}

impl TraceRow {
    pub fn service(&self) -> ServiceSample {
        ServiceSample {
            timestamp: self.timestamp,
            fps: self.fps,
            abs: self.abs,
        }
    }
}

/// Provenance of a contiguous run of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub name: String,
    /// `periodic`, `flashcrowd`, `constant` or `external`.
    pub pattern_kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<LoadPattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_seed: Option<u64>,
    /// Sessions at which utilization reaches 1; unknown for external traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    pub start: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub name: String,
    /// Rows (seconds).
    pub duration: usize,
    /// Row indices where a concatenated segment begins.
    #[serde(default)]
    pub boundaries: Vec<usize>,
    pub segments: Vec<SegmentInfo>,
}

impl TraceMetadata {
    pub(crate) fn external(name: &str, rows: usize) -> Self {
        TraceMetadata {
            name: name.to_string(),
            duration: rows,
            boundaries: Vec::new(),
            segments: vec![SegmentInfo {
                name: name.to_string(),
                pattern_kind: "external".into(),
                pattern: None,
                profile_id: None,
                profile_seed: None,
                capacity: None,
                start: 0,
                rows,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub metadata: TraceMetadata,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Labels every row; features and service samples are already aligned.
    pub fn labeled(&self, th: &SloThresholds) -> Vec<LabeledSample> {
        self.rows
            .iter()
            .map(|r| LabeledSample::new(r.timestamp, r.features, evaluate_sla(&r.service(), th)))
            .collect()
    }

    /// Per-row utilization `sessions / capacity`, if every segment knows its capacity.
    pub fn utilization(&self) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.rows.len());
        for seg in &self.metadata.segments {
            let c = seg.capacity?;
            out.extend(
                self.rows[seg.start..seg.start + seg.rows]
                    .iter()
                    .map(|r| r.sessions as f64 / c),
            );
        }
        (out.len() == self.rows.len()).then_some(out)
    }

    /// Labels predicted by thresholding the true utilization at 1.
    pub fn oracle_labels(&self) -> Option<Vec<SlaLabel>> {
        Some(
            self.utilization()?
                .into_iter()
                .map(|u| {
                    if u >= 1.0 {
                        SlaLabel::Violated
                    } else {
                        SlaLabel::Conforming
                    }
                })
                .collect(),
        )
    }
}

/// Generates a synthetic trace: sessions from `pattern`, metrics from `profile`.
pub fn synthesize_trace(pattern: &LoadPattern, profile: &TestbedProfile) -> Result<Trace> {
    pattern.validate()?;
    profile.validate()?;
    let sessions = simulate_sessions(pattern);
    let name = format!("{}-{}-s{}", pattern.shape.kind(), profile.id, pattern.seed);
    let mut trace = synthesize_from_sessions(&sessions, profile, pattern.seed, &name);
    let seg = &mut trace.metadata.segments[0];
    seg.pattern_kind = pattern.shape.kind().into();
    seg.pattern = Some(pattern.clone());
    Ok(trace)
}

/// Metrics for a given session series. `stream_seed` separates noise
/// streams of traces sharing a profile.
pub fn synthesize_from_sessions(
    sessions: &[u32],
    profile: &TestbedProfile,
    stream_seed: u64,
    name: &str,
) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(profile.seed, stream_seed));
    let curves = profile.curves();
    let c = profile.capacity;
    let rows = sessions
        .iter()
        .enumerate()
        .map(|(t, &n)| {
            let nf = n as f64;
            let mut values = [0.0; NUM_FEATURES];
            for (v, curve) in values.iter_mut().zip(curves.iter()) {
                *v = curve.sample(nf, c, &mut rng);
            }
            let (fps, abs) = profile.sample_service(nf / c, &mut rng);
            TraceRow {
                timestamp: t as f64,
                features: FeatureVector::clamped(values),
                fps,
                abs,
                sessions: n,
            }
        })
        .collect::<Vec<_>>();
    Trace {
        metadata: TraceMetadata {
            name: name.to_string(),
            duration: rows.len(),
            boundaries: Vec::new(),
            segments: vec![SegmentInfo {
                name: name.to_string(),
                pattern_kind: "custom".into(),
                pattern: None,
                profile_id: Some(profile.id.clone()),
                profile_seed: Some(profile.seed),
                capacity: Some(c),
                start: 0,
                rows: sessions.len(),
            }],
        },
        rows,
    }
}

/// Appends traces in order, re-basing timestamps to continue from the first.
pub fn concat_traces(traces: &[Trace]) -> Result<Trace> {
    let (first, rest) = traces.split_first().ok_or(Error::EmptyConcat)?;
    if rest.is_empty() {
        return Ok(first.clone());
    }
    let t0 = first.rows.first().map_or(0.0, |r| r.timestamp);
    let mut rows = Vec::with_capacity(traces.iter().map(Trace::len).sum());
    let mut boundaries = Vec::new();
    let mut segments = Vec::new();
    for (i, tr) in traces.iter().enumerate() {
        let offset = rows.len();
        if i > 0 {
            boundaries.push(offset);
        }
        boundaries.extend(tr.metadata.boundaries.iter().map(|b| b + offset));
        segments.extend(tr.metadata.segments.iter().map(|s| SegmentInfo {
            start: s.start + offset,
            ..s.clone()
        }));
        for r in &tr.rows {
            rows.push(TraceRow {
                timestamp: t0 + rows.len() as f64,
                ..r.clone()
            });
        }
    }
    let name = traces
        .iter()
        .map(|t| t.metadata.name.as_str())
        .collect::<Vec<_>>()
        .join("+");
    Ok(Trace {
        metadata: TraceMetadata {
            name,
            duration: rows.len(),
            boundaries,
            segments,
        },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracegen::LoadShape;

    fn periodic(seconds: u64, seed: u64) -> LoadPattern {
        LoadPattern::new(LoadShape::periodic(), seconds, seed)
    }

    #[test]
    fn idle_server_is_conforming() {
        let p = TestbedProfile::default_profile();
        let t = synthesize_from_sessions(&[0; 2000], &p, 1, "idle");
        let th = SloThresholds::default();
        assert!(t
            .labeled(&th)
            .iter()
            .all(|s| s.label == SlaLabel::Conforming));
        let mean = t.rows.iter().map(|r| r.fps).sum::<f64>() / 2000.0;
        assert!((mean - 25.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn saturated_server_is_violated() {
        let p = TestbedProfile::default_profile();
        let n = (3.0 * p.capacity) as u32;
        let t = synthesize_from_sessions(&vec![n; 2000], &p, 1, "busy");
        let v = t
            .labeled(&SloThresholds::default())
            .iter()
            .filter(|s| s.label.is_violated())
            .count();
        assert!(v >= 1980, "{v}");
    }

    #[test]
    fn deterministic_per_seeds() {
        let p = TestbedProfile::default_profile();
        let a = synthesize_trace(&periodic(600, 3), &p).unwrap();
        let b = synthesize_trace(&periodic(600, 3), &p).unwrap();
        assert_eq!(a, b);
        let c = synthesize_trace(&periodic(600, 4), &p).unwrap();
        assert_ne!(a.rows, c.rows);
    }

    #[test]
    fn monotone_degradation() {
        let p = TestbedProfile::default_profile();
        let th = SloThresholds::default();
        let low: Vec<u32> = (0..3000).map(|i| (i % 60) as u32).collect();
        let high: Vec<u32> = low.iter().map(|n| n + 5).collect();
        let (mut a, mut b) = (0, 0);
        for seed in 0..5 {
            let count = |s: &[u32]| {
                synthesize_from_sessions(s, &p, seed, "m")
                    .labeled(&th)
                    .iter()
                    .filter(|x| x.label.is_violated())
                    .count()
            };
            a += count(&low);
            b += count(&high);
        }
        assert!(b >= a, "{b} < {a}");
    }

    #[test]
    fn concat_identity_and_boundaries() {
        let p = TestbedProfile::default_profile();
        let a = synthesize_trace(&periodic(3600, 1), &p).unwrap();
        assert_eq!(concat_traces(std::slice::from_ref(&a)).unwrap(), a);
        let b = synthesize_trace(
            &periodic(3600, 2),
            &TestbedProfile::builtin("profile-b").unwrap(),
        )
        .unwrap();
        let ab = concat_traces(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(ab.len(), 7200);
        assert_eq!(ab.metadata.boundaries, vec![3600]);
        assert!(ab
            .rows
            .windows(2)
            .all(|w| w[1].timestamp - w[0].timestamp == 1.0));
        assert_eq!(ab.metadata.segments[1].start, 3600);
        let th = SloThresholds::default();
        let mut la = a.labeled(&th);
        la.extend(b.labeled(&th));
        let lab = ab.labeled(&th);
        assert!(la
            .iter()
            .zip(&lab)
            .all(|(x, y)| x.label == y.label && x.features == y.features));
        assert_eq!(ab.utilization().unwrap().len(), 7200);
    }

    #[test]
    fn nested_concat_keeps_boundaries() {
        let p = TestbedProfile::default_profile();
        let parts: Vec<Trace> = (0..3)
            .map(|s| synthesize_trace(&periodic(100, s), &p).unwrap())
            .collect();
        let ab = concat_traces(&parts[..2]).unwrap();
        let abc = concat_traces(&[ab, parts[2].clone()]).unwrap();
        assert_eq!(abc.metadata.boundaries, vec![100, 200]);
        assert!(matches!(concat_traces(&[]), Err(Error::EmptyConcat)));
    }
}
