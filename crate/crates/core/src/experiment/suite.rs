use super::config::{
    ConcatSpec, Duration, ExperimentConfig, Learner, PatternName, PatternSpec, Protocol, RunSpec,
    TraceSource, TraceSpec,
};
use crate::error::Result;
use crate::evaluation::PrequentialConfig;
use crate::labeling::SloThresholds;
use crate::tracegen::{synthesize_trace, LoadPattern, TestbedProfile, Trace};

/// Trace length used by the quick variant of the paper suite.
pub const QUICK_DURATION: Duration = Duration(1800);

/// Synthesizes one trace from a pattern and a built-in or file profile.
pub fn generate_trace(
    pattern: &PatternSpec,
    profile: &str,
    duration: Duration,
    seed: u64,
) -> Result<Trace> {
    let pattern = LoadPattern::new(pattern.shape(), duration.0, seed);
    synthesize_trace(&pattern, &TestbedProfile::resolve(profile)?)
}

fn generated(name: &str, pattern: PatternName, profile: &str, duration: Duration) -> TraceSpec {
    TraceSpec {
        name: name.into(),
        source: TraceSource::Generated {
            pattern: PatternSpec::Named(pattern),
            profile: profile.into(),
            duration,
            seed: None,
        },
    }
}

/// The full experiment matrix on synthetic traces.
///
/// Three traces (periodic on profile A, periodic on profile B, flash crowd
/// on profile A) each get three offline holdout runs and three online
/// prequential runs. Random forest is also run across every ordered pair of
/// traces, and OAUE over three concatenations.
pub fn paper_suite_config(seed: u64, quick: bool) -> ExperimentConfig {
    let dur = |full: u64| {
        if quick {
            QUICK_DURATION
        } else {
            Duration(full)
        }
    };
    let names = ["T1", "T2", "FC"];
    let traces = vec![
        generated("T1", PatternName::Periodic, "profile-a", dur(5 * 3600)),
        generated("T2", PatternName::Periodic, "profile-b", dur(4 * 3600)),
        generated("FC", PatternName::Flashcrowd, "profile-a", dur(5 * 3600)),
    ];
    let concat: Vec<ConcatSpec> = [["T1", "T2"], ["T2", "T1"], ["FC", "T2"]]
        .iter()
        .map(|p| ConcatSpec {
            name: p.join("+"),
            parts: p.iter().map(|s| s.to_string()).collect(),
        })
        .collect();
    let all: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let mut runs = Vec::new();
    for learner in [
        Learner::Logistic(Default::default()),
        Learner::Cart(Default::default()),
        Learner::RandomForest(Default::default()),
    ] {
        runs.push(RunSpec {
            learner,
            protocol: Protocol::Holdout,
            traces: all.clone(),
            pairs: Vec::new(),
        });
    }
    for learner in [
        Learner::SgdLogistic(Default::default()),
        Learner::HoeffdingTree(Default::default()),
        Learner::Oaue(Default::default()),
    ] {
        runs.push(RunSpec {
            learner,
            protocol: Protocol::Prequential,
            traces: all.clone(),
            pairs: Vec::new(),
        });
    }
    let pairs = names
        .iter()
        .flat_map(|a| {
            names
                .iter()
                .filter(move |b| *b != a)
                .map(move |b| [a.to_string(), b.to_string()])
        })
        .collect();
    runs.push(RunSpec {
        learner: Learner::RandomForest(Default::default()),
        protocol: Protocol::CrossTrace,
        traces: Vec::new(),
        pairs,
    });
    runs.push(RunSpec {
        learner: Learner::Oaue(Default::default()),
        protocol: Protocol::Prequential,
        traces: concat.iter().map(|c| c.name.clone()).collect(),
        pairs: Vec::new(),
    });
    ExperimentConfig {
        seed,
        out: None,
        slo: SloThresholds::default(),
        traces,
        concat,
        runs,
        prequential: PrequentialConfig::default(),
        split_fraction: 0.7,
    }
}
