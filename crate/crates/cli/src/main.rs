//! Command-line front end: relation analysis, fuzzing campaigns, and corpus
//! reports. Every JSON output embeds the fully resolved configuration so
//! results are reproducible from the file alone.

use clap::{Args, Parser, Subcommand};
use relfuzz::campaign::{run_campaign, CampaignConfig};
use relfuzz::coverage::{AnalysisThresholds, Threshold};
use relfuzz::hexdump;
use relfuzz::inference::{analyze, AnalysisConfig};
use relfuzz::report::build_report;
use relfuzz::targets::{by_name, Target, TARGET_NAMES};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "relfuzz",
    about = "Coverage-guided fuzzing with automatic size/offset relation inference",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover relation fields in one input and report them.
    Analyze(AnalyzeArgs),
    /// Run a fuzzing campaign against a built-in target.
    Fuzz(FuzzArgs),
    /// Summarize a corpus directory produced by `fuzz`.
    Report(ReportArgs),
}

#[derive(Args)]
struct AnalysisFlags {
    /// Coverage-loss threshold, as a fraction ("1/20" or "0.05").
    #[arg(long, default_value = "1/20")]
    t_loss: String,
    /// Coverage-restoration threshold, as a fraction.
    #[arg(long, default_value = "1/5")]
    t_restore: String,
    /// Cap on target invocations per analysis.
    #[arg(long, default_value_t = 20_000)]
    max_invocations: u64,
    /// Inputs longer than this are not analyzed.
    #[arg(long, default_value_t = 4096)]
    max_input_len: usize,
    /// Fixpoint round cap.
    #[arg(long, default_value_t = 4)]
    max_rounds: u32,
    /// Filler byte inserted by restorative mutations.
    #[arg(long, default_value_t = 0)]
    filler: u8,
}

impl AnalysisFlags {
    fn to_config(&self) -> Result<AnalysisConfig, String> {
        let t_loss = Threshold::parse(&self.t_loss).map_err(|e| e.to_string())?;
        let t_restore = Threshold::parse(&self.t_restore).map_err(|e| e.to_string())?;
        if self.max_rounds == 0 || self.max_invocations == 0 {
            return Err("max-rounds and max-invocations must be at least 1".into());
        }
        Ok(AnalysisConfig {
            thresholds: AnalysisThresholds { t_loss, t_restore },
            max_invocations: self.max_invocations,
            max_input_len: self.max_input_len,
            max_rounds: self.max_rounds,
            filler: self.filler,
        })
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Target name: nestedcmd, chunks, tlv, objfile, echo.
    #[arg(long)]
    target: String,
    /// Input file to analyze.
    #[arg(long)]
    seed: PathBuf,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render an annotated hexdump of the input and its relations.
    #[arg(long)]
    hexdump: bool,
    /// Accepted for symmetry; analyze output is always JSON.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    analysis: AnalysisFlags,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long)]
    target: String,
    /// Directory of seed inputs (may be missing or empty).
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Output corpus directory.
    #[arg(long)]
    corpus: PathBuf,
    /// Execution budget (analysis invocations count against it).
    #[arg(long)]
    execs: Option<u64>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    seconds: Option<u64>,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Disable the relation analysis and fix-ups (baseline arm).
    #[arg(long)]
    no_frameshift: bool,
    /// Havoc trials per corpus entry per scheduling cycle.
    #[arg(long, default_value_t = 512)]
    trials: u32,
    #[arg(long, default_value_t = 1)]
    havoc_min: u32,
    #[arg(long, default_value_t = 8)]
    havoc_max: u32,
    #[command(flatten)]
    analysis: AnalysisFlags,
}

#[derive(Args)]
struct ReportArgs {
    /// Corpus directory produced by `fuzz`.
    #[arg(long)]
    corpus: PathBuf,
    /// Target name; defaults to the one recorded in stats.json.
    #[arg(long)]
    target: Option<String>,
    /// Emit the report as JSON instead of a text table.
    #[arg(long)]
    json: bool,
}

fn lookup_target(name: &str) -> Result<&'static dyn Target, String> {
    by_name(name).ok_or_else(|| {
        format!("unknown target '{name}' (available: {})", TARGET_NAMES.join(", "))
    })
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    config: &'a AnalysisConfig,
    target: &'a str,
    #[serde(flatten)]
    report: relfuzz::inference::AnalysisReport,
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), String> {
    let target = lookup_target(&args.target)?;
    let cfg = args.analysis.to_config()?;
    let input = std::fs::read(&args.seed)
        .map_err(|e| format!("cannot read {}: {e}", args.seed.display()))?;
    let report = analyze(&input, target, &cfg).map_err(|e| e.to_string())?;
    if args.hexdump {
        print!("{}", hexdump::render(&input, &report.fields()));
    }
    let out = AnalyzeOutput { config: &cfg, target: target.name(), report };
    let json = serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| e.to_string())?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_fuzz(args: &FuzzArgs) -> Result<(), String> {
    let target = lookup_target(&args.target)?;
    if args.execs.is_none() && args.seconds.is_none() {
        return Err("set at least one of --execs / --seconds".into());
    }
    let cfg = CampaignConfig {
        rng_seed: args.rng_seed,
        max_execs: args.execs,
        max_seconds: args.seconds,
        frameshift_enabled: !args.no_frameshift,
        havoc_min: args.havoc_min,
        havoc_max: args.havoc_max,
        trials_per_cycle: args.trials,
        analysis: args.analysis.to_config()?,
        seeds_dir: args.seeds.clone(),
        corpus_dir: Some(args.corpus.clone()),
    };
    let stats = run_campaign(target, &cfg).map_err(|e| e.to_string())?;
    println!(
        "done: {} executions, corpus {}, {} features, {} fixups",
        stats.executions, stats.corpus_size, stats.feature_count, stats.fixups_fired
    );
    Ok(())
}

#[derive(Serialize)]
struct ReportOutput {
    config: ReportConfigEcho,
    #[serde(flatten)]
    report: relfuzz::report::CorpusReport,
}

#[derive(Serialize)]
struct ReportConfigEcho {
    corpus: PathBuf,
    target: String,
}

fn cmd_report(args: &ReportArgs) -> Result<(), String> {
    let name = match &args.target {
        Some(name) => name.clone(),
        None => {
            // steal the target name from the recorded campaign stats
            let raw = std::fs::read(args.corpus.join("stats.json"))
                .map_err(|_| "no --target given and no stats.json in corpus".to_string())?;
            let v: serde_json::Value =
                serde_json::from_slice(&raw).map_err(|e| format!("stats.json: {e}"))?;
            v.get("target")
                .and_then(|t| t.as_str())
                .map(str::to_string)
                .ok_or_else(|| "no --target given and none recorded".to_string())?
        }
    };
    let target = lookup_target(&name)?;
    let report = build_report(target, &args.corpus).map_err(|e| e.to_string())?;
    if args.json {
        let out = ReportOutput {
            config: ReportConfigEcho { corpus: args.corpus.clone(), target: name },
            report,
        };
        println!("{}", serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?);
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Fuzz(args) => cmd_fuzz(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
