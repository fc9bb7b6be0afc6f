use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use ecgrisk_cli::error::Classify;
use ecgrisk_cli::{exit_code, Pipeline, PipelineConfig, Stage};
use ecgrisk_core::{FeatureSet, Format, Phase};

#[derive(Parser)]
#[command(name = "ecgrisk", version, about = "ECG AF-recurrence risk pipeline")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cohort manifest CSV.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rebuild artifacts that already exist.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Load every manifest recording and flag corrupted ones.
    Ingest,
    /// Score bSQI windows and keep the best segments per phase.
    Segments,
    /// Extract ECG features from the selected segments.
    Features,
    /// Paired pre/post tests and the volcano table.
    Stats,
    /// Nested cross-validated risk models.
    Train(TrainArgs),
    /// Summarize artifacts into report.json and report.md.
    Report,
    /// Every stage from ingest to report.
    Run(TrainArgs),
    /// Write a synthetic cohort (recordings, manifest, ground truth).
    Synth(SynthArgs),
}

#[derive(Args, Default)]
struct TrainArgs {
    #[arg(long, value_delimiter = ',')]
    phase: Option<Vec<Phase>>,
    /// meta, ecg or meta+ecg.
    #[arg(long = "features", value_delimiter = ',')]
    feature_sets: Option<Vec<FeatureSet>>,
    #[arg(long)]
    outer_k: Option<usize>,
    #[arg(long)]
    inner_k: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    fs: Option<f64>,
    /// Heart-rate change from the start to the end of each recording.
    #[arg(long)]
    hr_shift: Option<f64>,
    /// Replace the last N recordings with pure noise.
    #[arg(long)]
    noise_patients: Option<usize>,
    /// binary or csv.
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s.to_ascii_lowercase().as_str() {
        "binary" | "bin" => Ok(Format::Binary),
        "csv" => Ok(Format::Csv),
        other => Err(format!("unknown format {other:?}")),
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(w) = g.workers {
        cfg.workers = w;
    }
    if let Some(m) = g.manifest {
        cfg.manifest = Some(m);
    }
    let train_args = match &cli.command {
        Command::Train(a) | Command::Run(a) => Some(a),
        _ => None,
    };
    if let Some(a) = train_args {
        cfg.train.outer_k = a.outer_k.unwrap_or(cfg.train.outer_k);
        cfg.train.inner_k = a.inner_k.unwrap_or(cfg.train.inner_k);
        cfg.train.budget = a.budget.unwrap_or(cfg.train.budget);
    }
    if let Command::Synth(a) = &cli.command {
        let s = &mut cfg.synth;
        s.n_patients = a.n.unwrap_or(s.n_patients);
        s.duration_s = a.duration.unwrap_or(s.duration_s);
        s.fs = a.fs.unwrap_or(s.fs);
        s.post_hr_shift_bpm = a.hr_shift.unwrap_or(s.post_hr_shift_bpm);
        s.noise_patients = a.noise_patients.unwrap_or(s.noise_patients);
        s.format = a.format.unwrap_or(s.format);
    }
    cfg.validate().config()?;
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(|e| anyhow!("{e}"))
            .config()?;
    }
    let out = g
        .out
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| anyhow!("no output directory (--out or `out` in the config)"))
        .config()?;

    if let Command::Synth(_) = cli.command {
        let manifest = ecgrisk_cli::synth::write_cohort(&out, &cfg.synth, cfg.seed)?;
        println!("{}", manifest.display());
        return Ok(());
    }

    let mut pipeline = Pipeline::new(cfg, out);
    pipeline.force = g.force;
    if let Some(a) = train_args {
        pipeline.phases = a.phase.clone();
        pipeline.feature_sets = a.feature_sets.clone();
    }
    match cli.command {
        Command::Ingest => pipeline.run(Stage::Ingest),
        Command::Segments => pipeline.run(Stage::Segments),
        Command::Features => pipeline.run(Stage::Features),
        Command::Stats => pipeline.run(Stage::Stats),
        Command::Train(_) => pipeline.run(Stage::Train),
        Command::Report => pipeline.run(Stage::Report),
        Command::Run(_) => pipeline.run_all(),
        Command::Synth(_) => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
