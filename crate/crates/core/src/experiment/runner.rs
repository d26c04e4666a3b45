use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Learner, Protocol, TraceSource};
use super::report::{write_metrics_csv, write_metrics_txt};
use crate::error::{Error, Result};
use crate::evaluation::{cross_trace_evaluate, holdout_evaluate, prequential_evaluate};
use crate::metrics::{ConfusionMatrix, MetricsReport};
use crate::seed::seed_for;
use crate::tracegen::{
    concat_traces, read_trace, synthesize_trace, write_trace, LoadPattern, TestbedProfile, Trace,
    TraceMetadata,
};
use crate::types::LabeledSample;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
    /// Keep every `stride`-th row of the accuracy series files.
    pub stride: usize,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunOptions {
            out: out.into(),
            workers: None,
            stride: 1,
        }
    }
}

/// Result of one (learner, protocol, trace or pair) combination.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub id: String,
    pub method: String,
    pub protocol: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_trace: Option<String>,
    pub test_trace: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
    /// Relative path of the accuracy series file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    /// Concatenation boundaries as row indices of the series file.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series_boundaries: Vec<usize>,
    #[serde(skip_serializing_if = "is_zero")]
    pub divergent_chunks: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

#[derive(Debug, Clone, Serialize)]
pub struct RunFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub traces: Vec<TraceMetadata>,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    seed: u64,
    config: &'a ExperimentConfig,
    traces: &'a [TraceMetadata],
    runs: &'a [RunRecord],
    failures: &'a [RunFailure],
}

#[derive(Debug, Clone)]
enum Target {
    Single(String),
    Pair(String, String),
}

#[derive(Debug, Clone)]
struct Job {
    id: String,
    learner: Learner,
    protocol: Protocol,
    target: Target,
    seed: u64,
}

fn plan_jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut jobs = Vec::new();
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    for run in &cfg.runs {
        let method = run.learner.name();
        let targets: Vec<(String, Target)> = match run.protocol {
            Protocol::CrossTrace => run
                .pairs
                .iter()
                .map(|[a, b]| {
                    (
                        format!("{method}-cross-{a}-to-{b}"),
                        Target::Pair(a.clone(), b.clone()),
                    )
                })
                .collect(),
            p => run
                .traces
                .iter()
                .map(|t| {
                    (
                        format!("{method}-{}-{t}", p.name()),
                        Target::Single(t.clone()),
                    )
                })
                .collect(),
        };
        for (base, target) in targets {
            let n = used.entry(base.clone()).or_insert(0);
            *n += 1;
            let id = if *n == 1 { base } else { format!("{base}-{n}") };
            jobs.push(Job {
                seed: seed_for(cfg.seed, &id),
                id,
                learner: run.learner.clone(),
                protocol: run.protocol,
                target,
            });
        }
    }
    jobs
}

fn build_traces(cfg: &ExperimentConfig) -> Result<BTreeMap<String, Trace>> {
    let generated: Vec<(String, Trace)> = cfg
        .traces
        .par_iter()
        .map(|spec| {
            let mut trace = match &spec.source {
                TraceSource::Generated {
                    pattern,
                    profile,
                    duration,
                    seed,
                } => {
                    let seed = seed.unwrap_or_else(|| seed_for(cfg.seed, &spec.name));
                    let pattern = LoadPattern::new(pattern.shape(), duration.0, seed);
                    synthesize_trace(&pattern, &TestbedProfile::resolve(profile)?)?
                }
                TraceSource::File { path } => read_trace(path)?,
            };
            trace.metadata.name = spec.name.clone();
            if let [seg] = trace.metadata.segments.as_mut_slice() {
                seg.name = spec.name.clone();
            }
            Ok((spec.name.clone(), trace))
        })
        .collect::<Result<_>>()?;
    let mut traces: BTreeMap<String, Trace> = generated.into_iter().collect();
    for c in &cfg.concat {
        let parts: Vec<Trace> = c.parts.iter().map(|p| traces[p].clone()).collect();
        let mut joined = concat_traces(&parts)?;
        joined.metadata.name = c.name.clone();
        traces.insert(c.name.clone(), joined);
    }
    Ok(traces)
}

struct Labeled<'a> {
    trace: &'a Trace,
    samples: Vec<LabeledSample>,
}

fn execute(
    job: &Job,
    data: &BTreeMap<String, Labeled<'_>>,
    cfg: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunRecord> {
    let method = job.learner.name().to_string();
    let record = |train: Option<&str>,
                  test: &str,
                  n_train: usize,
                  n_test: usize,
                  confusion: ConfusionMatrix,
                  report: MetricsReport| RunRecord {
        id: job.id.clone(),
        method: method.clone(),
        protocol: job.protocol.name().into(),
        train_trace: train.map(str::to_string),
        test_trace: test.to_string(),
        seed: job.seed,
        n_train,
        n_test,
        confusion,
        report,
        series: None,
        series_boundaries: Vec::new(),
        divergent_chunks: 0,
    };
    match (&job.protocol, &job.target) {
        (Protocol::Holdout, Target::Single(t)) => {
            let m = job.learner.offline().expect("validated learner");
            let o = holdout_evaluate(&m, &data[t].samples, cfg.split_fraction, job.seed)?;
            Ok(record(
                Some(t),
                t,
                o.n_train,
                o.n_test,
                o.confusion,
                o.report,
            ))
        }
        (Protocol::CrossTrace, Target::Pair(a, b)) => {
            let m = job.learner.offline().expect("validated learner");
            let o = cross_trace_evaluate(&m, &data[a].samples, &data[b].samples, job.seed)?;
            Ok(record(
                Some(a),
                b,
                o.n_train,
                o.n_test,
                o.confusion,
                o.report,
            ))
        }
        (Protocol::Prequential, Target::Single(t)) => {
            let mut model = job.learner.online().expect("validated learner").build()?;
            let o = prequential_evaluate(model.as_mut(), &data[t].samples, &cfg.prequential)?;
            let rel = format!("series/{}.csv", job.id);
            let path = opts.out.join(&rel);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            o.series
                .write_csv(BufWriter::new(file), opts.stride)
                .map_err(|e| Error::io(&path, e))?;
            let boot = cfg.prequential.bootstrap_size;
            let mut r = record(None, t, boot, o.series.len(), o.confusion, o.report);
            r.series = Some(rel);
            r.series_boundaries = data[t]
                .trace
                .metadata
                .boundaries
                .iter()
                .filter(|&&b| b >= boot)
                .map(|b| b - boot)
                .collect();
            r.divergent_chunks = o.divergent_chunks;
            Ok(r)
        }
        _ => unreachable!("validated protocol/target combination"),
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Runs every configured combination and writes the results bundle to `opts.out`.
///
/// Failed runs do not stop the others; their results are missing from the
/// tables, listed in `run-metadata.json`, and reported through
/// [`Error::RunsFailed`] once everything has been written.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    if opts.stride == 0 {
        return Err(Error::InvalidConfig("stride must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    pool.install(|| run_in_pool(cfg, opts))
}

fn run_in_pool(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutcome> {
    let out = &opts.out;
    create_dir(out)?;
    create_dir(&out.join("traces"))?;
    create_dir(&out.join("series"))?;

    log::info!("building {} trace(s)", cfg.traces.len() + cfg.concat.len());
    let traces = build_traces(cfg)?;
    traces
        .par_iter()
        .map(|(name, t)| write_trace(t, &out.join("traces").join(format!("{name}.csv"))))
        .collect::<Result<Vec<()>>>()?;
    let data: BTreeMap<String, Labeled<'_>> = traces
        .iter()
        .map(|(n, t)| {
            (
                n.clone(),
                Labeled {
                    trace: t,
                    samples: t.labeled(&cfg.slo),
                },
            )
        })
        .collect();

    let jobs = plan_jobs(cfg);
    log::info!("running {} job(s)", jobs.len());
    let results: Vec<Result<RunRecord>> = jobs
        .par_iter()
        .map(|job| {
            let r = execute(job, &data, cfg, opts);
            match &r {
                Ok(rec) => log::info!("{}: CA {:.4}", job.id, rec.report.ca),
                Err(e) => log::error!("{}: {e}", job.id),
            }
            r
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (job, r) in jobs.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(RunFailure {
                id: job.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    let metas: Vec<TraceMetadata> = traces.values().map(|t| t.metadata.clone()).collect();

    let path = out.join("metrics.csv");
    write_metrics_csv(&records, &path)?;
    let path = out.join("metrics.txt");
    write_metrics_txt(&records, &path)?;
    let path = out.join("run-metadata.json");
    let meta = RunMetadata {
        seed: cfg.seed,
        config: cfg,
        traces: &metas,
        runs: &records,
        failures: &failures,
    };
    fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n")
        .map_err(|e| Error::io(&path, e))?;

    if let Some(first) = failures.first() {
        return Err(Error::RunsFailed {
            failed: failures.iter().map(|f| f.id.clone()).collect(),
            first: first.id.clone(),
            message: first.error.clone(),
        });
    }
    Ok(ExperimentOutcome {
        records,
        traces: metas,
    })
}
