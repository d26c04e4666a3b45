use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use slastream::experiment::{
    generate_trace, paper_suite_config, render_metrics_table, run_experiment, Duration,
    ExperimentConfig, PatternName, PatternSpec, RunOptions,
};
use slastream::tracegen::write_trace;

#[derive(Parser)]
#[command(
    name = "slastream",
    version,
    about = "SLA violation prediction experiments on synthetic or recorded traces"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one trace CSV plus its metadata sidecar.
    Generate(GenerateArgs),
    /// Run an experiment described by a JSON config.
    Run(RunArgs),
    /// Run the built-in experiment matrix.
    PaperSuite(SuiteArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    Periodic,
    Flashcrowd,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    pattern: Pattern,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Length such as `4h`, `30m`, `90s` or plain seconds.
    #[arg(long, default_value = "4h", value_parser = parse_duration)]
    duration: Duration,
    /// Built-in profile name or path to a profile JSON file.
    #[arg(long, default_value = "profile-a")]
    profile: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// File stem; defaults to `<pattern>-<profile>-s<seed>`.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct ExecArgs {
    /// Results directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Keep every N-th row of the accuracy series.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    stride: u64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    exec: ExecArgs,
}

#[derive(Args)]
struct SuiteArgs {
    /// 30-minute traces for smoke testing.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    exec: ExecArgs,
}

fn parse_duration(s: &str) -> Result<Duration, String> {
    Duration::parse(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Run(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)
                .with_context(|| format!("loading {}", a.config.display()))?;
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            let out = a
                .exec
                .out
                .clone()
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            execute(&cfg, out, &a.exec)
        }
        Command::PaperSuite(a) => {
            let cfg = paper_suite_config(a.seed, a.quick);
            let out = a
                .exec
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("results"));
            execute(&cfg, out, &a.exec)
        }
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let pattern = match a.pattern {
        Pattern::Periodic => PatternName::Periodic,
        Pattern::Flashcrowd => PatternName::Flashcrowd,
    };
    let trace = generate_trace(&PatternSpec::Named(pattern), &a.profile, a.duration, a.seed)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let name = a.name.unwrap_or_else(|| trace.metadata.name.clone());
    let path = a.out.join(format!("{name}.csv"));
    write_trace(&trace, &path)?;
    println!("{} ({} rows)", path.display(), trace.len());
    Ok(())
}

fn execute(cfg: &ExperimentConfig, out: PathBuf, exec: &ExecArgs) -> Result<()> {
    let opts = RunOptions {
        out: out.clone(),
        workers: exec.workers,
        stride: exec.stride as usize,
    };
    let outcome = run_experiment(cfg, &opts)?;
    print!("{}", render_metrics_table(&outcome.records));
    println!("\nresults written to {}", out.display());
    Ok(())
}
