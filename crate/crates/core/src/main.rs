use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use varcomplex::cli::{
    cmd_graph, cmd_labels, cmd_metrics, cmd_report, cmd_run, cmd_scan, cmd_stats, Baseline, CliError, PipelineConfig,
    StageOutcome,
};
use varcomplex::metrics::DistanceMode;
use varcomplex::stats::{StatsOptions, Transform};

#[derive(Parser)]
#[command(name = "varcomplex", version, about = "Configuration-complexity metrics for C code with #ifdef variability")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Corpus manifest (JSON list of {path, file_pc}).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    /// CVE manifest with fixing commits and their diffs.
    #[arg(long, global = true)]
    cve_manifest: Option<PathBuf>,

    /// Commit-log export with `\0COMMIT <id>\0` record separators.
    #[arg(long, global = true)]
    commit_log: Option<PathBuf>,

    /// Baseline configuration, `<label>=<assignment file>` or `<label>=allyes`.
    #[arg(long = "baseline", global = true, value_name = "LABEL=PATH|allyes")]
    baselines: Vec<Baseline>,

    #[arg(long, global = true, default_value = "inverse", value_name = "inverse|direct")]
    betweenness_mode: DistanceMode,

    /// Bootstrap replicates per metric (0 disables the bootstrap).
    #[arg(long, global = true, default_value_t = 1000)]
    bootstrap_b: usize,

    #[arg(long, global = true, default_value = "identity", value_name = "identity|log1p")]
    bootstrap_transform: Transform,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Also write graph.dot.
    #[arg(long, global = true)]
    dot: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Extract functions, presence conditions and call sites.
    Scan,
    /// Build the variational call graph.
    Graph,
    /// Label functions touched by CVE fixes.
    Labels,
    /// Compute the per-function metric table.
    Metrics,
    /// Compare vulnerable and non-vulnerable functions.
    Stats,
    /// Write a text summary and density data.
    Report,
    /// Run every stage in order.
    Run,
}

fn print(outcome: &StageOutcome) {
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", outcome.summary);
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = PipelineConfig {
        manifest: cli.manifest.clone(),
        cve_manifest: cli.cve_manifest.clone(),
        commit_log: cli.commit_log.clone(),
        baselines: cli.baselines.clone(),
        betweenness_mode: cli.betweenness_mode,
        stats: StatsOptions { bootstrap_b: cli.bootstrap_b, transform: cli.bootstrap_transform, seed: cli.seed },
        out: cli.out.clone(),
        dot: cli.dot,
    };
    cfg.validate()?;
    let outcomes = match cli.command {
        Command::Scan => vec![cmd_scan(&cfg)?],
        Command::Graph => vec![cmd_graph(&cfg)?],
        Command::Labels => vec![cmd_labels(&cfg)?],
        Command::Metrics => vec![cmd_metrics(&cfg)?],
        Command::Stats => vec![cmd_stats(&cfg)?],
        Command::Report => vec![cmd_report(&cfg)?],
        Command::Run => cmd_run(&cfg)?,
    };
    outcomes.iter().for_each(print);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
