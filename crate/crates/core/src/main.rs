//! `webcorpus` command-line interface.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use webcorpus::classifier::{self, NgramModel, ScoreFile, TrainConfig};
use webcorpus::error::Error;
use webcorpus::extraction::DedupScope;
use webcorpus::pipeline::{self, PipelineConfig, PipelineKind};
use webcorpus::stats::{aggregate_reports, render_retention_table, RunReport};
use webcorpus::store;

#[derive(Parser)]
#[command(
    name = "webcorpus",
    version,
    about = "Curate web-archive corpora: extraction, filtering, dedup, and code/math/QA mining"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a pipeline over the configured shards.
    Run(RunArgs),
    /// Check a configuration without running it.
    Validate(RunArgs),
    /// Aggregate run reports into a retention table.
    Stats(StatsArgs),
    /// Train or apply the n-gram classifier.
    #[command(subcommand)]
    Classifier(ClassifierCmd),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML config file mirroring the pipeline configuration fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pipeline: web_wet, web_warc, code, math_html, math_ascii, open_qa, mcq.
    #[arg(long)]
    pipeline: Option<String>,
    /// Input shard file or directory (repeatable).
    #[arg(long = "input")]
    inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long = "out")]
    out: Option<PathBuf>,
    /// Paragraph-dedup scope: shard, snapshot, global.
    #[arg(long = "dedup-scope")]
    dedup_scope: Option<String>,
    /// Threshold override, name=value (repeatable).
    #[arg(long = "threshold")]
    thresholds: Vec<String>,
    /// Model or score file, role=path (repeatable). Roles: lang_id,
    /// quality, ascii_math, open_qa, code_lang.
    #[arg(long = "model")]
    models: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Snapshot id override for all inputs.
    #[arg(long = "snapshot-id")]
    snapshot_id: Option<String>,
    /// Emit per-document filter audit sidecars.
    #[arg(long)]
    audit: bool,
    /// Test hook: simulate a crash after N phase-A shards.
    #[arg(long = "abort-after-shards", hide = true)]
    abort_after_shards: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    /// run_report.json files (all from the same pipeline).
    reports: Vec<PathBuf>,
    /// Also write the aggregated stages as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ClassifierCmd {
    /// Train on `__pos__<TAB>text` / `__neg__<TAB>text` lines.
    Train {
        /// Labeled data file.
        #[arg(long)]
        data: PathBuf,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
        /// Power-of-two feature dimension.
        #[arg(long, default_value_t = 1 << 20)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        epochs: u32,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Score documents (JSONL) or a single text.
    Score {
        #[arg(long)]
        model: PathBuf,
        /// Document shard in the interchange format.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Where to write `doc_id<TAB>score` lines (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Score one literal text instead of a file.
        #[arg(long)]
        text: Option<String>,
    },
}

fn build_config(args: &RunArgs) -> Result<PipelineConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| e.to_string())?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = &args.pipeline {
        cfg.pipeline = PipelineKind::from_str(p)?;
    }
    if !args.inputs.is_empty() {
        cfg.input_paths = args.inputs.clone();
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(scope) = &args.dedup_scope {
        cfg.dedup_scope = match scope.as_str() {
            "shard" => DedupScope::Shard,
            "snapshot" => DedupScope::Snapshot,
            "global" => DedupScope::Global,
            other => return Err(format!("unknown dedup scope {other:?}")),
        };
    }
    for spec in &args.thresholds {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| format!("--threshold expects name=value, got {spec:?}"))?;
        let value: f64 = value.parse().map_err(|_| format!("bad threshold value in {spec:?}"))?;
        cfg.thresholds.set(name, value)?;
    }
    for spec in &args.models {
        let (role, path) = spec
            .split_once('=')
            .ok_or_else(|| format!("--model expects role=path, got {spec:?}"))?;
        cfg.model_paths.insert(role.to_string(), PathBuf::from(path));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    if let Some(snapshot) = &args.snapshot_id {
        cfg.snapshot_id = Some(snapshot.clone());
    }
    if args.audit {
        cfg.audit = true;
    }
    if args.abort_after_shards.is_some() {
        cfg.abort_after_shards = args.abort_after_shards;
    }
    Ok(cfg)
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn cmd_run(args: RunArgs) -> ExitCode {
    let cfg = match build_config(&args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("configuration error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match pipeline::run(&cfg) {
        Ok(report) => {
            print!("{}", render_retention_table(&report.per_stage));
            println!("report: {}", cfg.output_dir.join("run_report.json").display());
            ExitCode::SUCCESS
        }
        Err(Error::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn cmd_validate(args: RunArgs) -> ExitCode {
    let cfg = match build_config(&args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("configuration error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let diags = pipeline::validate(&cfg);
    if diags.is_empty() {
        println!("configuration ok");
        ExitCode::SUCCESS
    } else {
        for d in &diags {
            eprintln!("{d}");
        }
        ExitCode::from(EXIT_CONFIG)
    }
}

fn cmd_stats(args: StatsArgs) -> ExitCode {
    if args.reports.is_empty() {
        eprintln!("stats: no report files given");
        return ExitCode::from(EXIT_CONFIG);
    }
    let mut reports = Vec::new();
    for path in &args.reports {
        match RunReport::read(path) {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
    }
    let stages = match aggregate_reports(&reports) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    print!("{}", render_retention_table(&stages));
    if let Some(json_path) = &args.json {
        let json = match serde_json::to_string_pretty(&stages) {
            Ok(j) => j,
            Err(e) => {
                eprintln!("serializing stats: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
        };
        if let Err(e) = std::fs::write(json_path, json) {
            eprintln!("writing {}: {e}", json_path.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    ExitCode::SUCCESS
}

fn cmd_classifier(cmd: ClassifierCmd) -> ExitCode {
    match cmd {
        ClassifierCmd::Train { data, out, dim, epochs, lr, seed } => {
            let examples = match classifier::load_labeled(&data) {
                Ok(ex) => ex,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            let cfg = TrainConfig {
                feature_dim: dim,
                epochs,
                learning_rate: lr,
                shuffle_seed: seed,
                ..TrainConfig::default()
            };
            match NgramModel::train(&examples, &cfg) {
                Ok((model, losses)) => {
                    if let Err(e) = model.save(&out) {
                        eprintln!("{e}");
                        return ExitCode::from(EXIT_RUNTIME);
                    }
                    let losses: Vec<String> = losses.iter().map(|l| format!("{l:.4}")).collect();
                    println!("trained on {} examples; epoch losses: {}", examples.len(), losses.join(" "));
                    ExitCode::SUCCESS
                }
                Err(Error::Config(msg)) => {
                    eprintln!("configuration error: {msg}");
                    ExitCode::from(EXIT_CONFIG)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
        ClassifierCmd::Score { model, input, out, text } => {
            let model = match NgramModel::load(&model) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Some(text) = text {
                println!("{}", model.score(&text));
                return ExitCode::SUCCESS;
            }
            let Some(input) = input else {
                eprintln!("classifier score needs --input or --text");
                return ExitCode::from(EXIT_CONFIG);
            };
            let docs = match store::read_documents(&input) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            let mut scores = ScoreFile::default();
            for doc in &docs {
                scores.entries.insert(doc.doc_id.clone(), model.score(&doc.text));
            }
            match out {
                Some(path) => {
                    if let Err(e) = scores.save(&path) {
                        eprintln!("{e}");
                        return ExitCode::from(EXIT_RUNTIME);
                    }
                }
                None => {
                    for (id, score) in &scores.entries {
                        println!("{id}\t{score}");
                    }
                }
            }
            ExitCode::SUCCESS
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Classifier(cmd) => cmd_classifier(cmd),
    }
}
