//! Pipeline stages behind the `varcomplex` binary. Every stage reads the
//! artifacts of earlier stages from the output directory and writes its own:
//!
//! | stage   | reads                         | writes                               |
//! |---------|-------------------------------|--------------------------------------|
//! | scan    | corpus manifest, C sources    | `functions.json`                     |
//! | graph   | `functions.json`              | `graph.json`, `graph.dot` (`--dot`)  |
//! | labels  | `functions.json`, CVE inputs  | `labels.csv`, `label_warnings.txt`   |
//! | metrics | `graph.json`, `labels.csv`    | `metrics.csv`                        |
//! | stats   | `metrics.csv`, `labels.csv`   | `stats.json`, `stats.csv`            |
//! | report  | `stats.json`, `metrics.csv`   | `report.txt`, `density.csv`          |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cparse::{decode_source, scan_source, CorpusManifest, FunctionRecord, ScannedSource, SourceFile};
use crate::metrics::{
    fmt_sig12, metric_table, read_metric_csv, write_metric_csv, DistanceMode, MetricRow, MetricsError,
};
use crate::pcalg::{is_identifier, options_of, ConfigAssignment, OptionName};
use crate::stats::{analyze, stats_metrics, write_stats_csv, write_stats_json, MetricReport, StatsOptions};
use crate::vargraph::{build, export, import_json, ExportFormat, GraphError, VariationalCallGraph};
use crate::vulnmine::{
    label_functions, merge_commit_log, parse_cve_manifest, read_label_csv, scan_commit_log, write_label_csv,
};

pub const FUNCTIONS_JSON: &str = "functions.json";
pub const GRAPH_JSON: &str = "graph.json";
pub const GRAPH_DOT: &str = "graph.dot";
pub const LABELS_CSV: &str = "labels.csv";
pub const LABEL_WARNINGS: &str = "label_warnings.txt";
pub const METRICS_CSV: &str = "metrics.csv";
pub const STATS_JSON: &str = "stats.json";
pub const STATS_CSV: &str = "stats.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const DENSITY_CSV: &str = "density.csv";

/// Width of the log10(1 + x) bins in `density.csv`.
pub const DENSITY_BIN_WIDTH: f64 = 0.25;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing input; exit code 2.
    #[error("{0}")]
    Input(String),
    /// A stage produced something it should not have; exit code 3.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaselineSource {
    AllYes,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Baseline {
    pub label: String,
    pub source: BaselineSource,
}

impl std::str::FromStr for Baseline {
    type Err = String;

    /// `<label>=<path|allyes>`
    fn from_str(s: &str) -> Result<Self, String> {
        let (label, value) = s.split_once('=').ok_or_else(|| format!("expected <label>=<path|allyes>, got {s:?}"))?;
        if !is_identifier(label) {
            return Err(format!("baseline label {label:?} must be an identifier"));
        }
        let source = match value {
            "allyes" => BaselineSource::AllYes,
            "" => return Err(format!("baseline {label} has no assignment file")),
            path => BaselineSource::File(PathBuf::from(path)),
        };
        Ok(Baseline { label: label.to_string(), source })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    pub cve_manifest: Option<PathBuf>,
    pub commit_log: Option<PathBuf>,
    pub baselines: Vec<Baseline>,
    pub betweenness_mode: DistanceMode,
    pub stats: StatsOptions,
    pub out: PathBuf,
    pub dot: bool,
}

impl PipelineConfig {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            manifest: None,
            cve_manifest: None,
            commit_log: None,
            baselines: Vec::new(),
            betweenness_mode: DistanceMode::Inverse,
            stats: StatsOptions::default(),
            out: out.into(),
            dot: false,
        }
    }

    /// Referenced input paths exist and baseline labels are unique.
    pub fn validate(&self) -> Result<(), CliError> {
        let files = [&self.manifest, &self.cve_manifest, &self.commit_log];
        let baseline_files = self.baselines.iter().filter_map(|b| match &b.source {
            BaselineSource::File(p) => Some(p),
            BaselineSource::AllYes => None,
        });
        for p in files.into_iter().flatten().chain(baseline_files) {
            if !p.is_file() {
                return Err(CliError::Input(format!("{}: no such file", p.display())));
            }
        }
        let mut seen = BTreeSet::new();
        for b in &self.baselines {
            if !seen.insert(b.label.as_str()) {
                return Err(CliError::Input(format!("baseline label {} given twice", b.label)));
            }
            let clashes = ["w", "size", "internal", "external"].contains(&b.label.as_str());
            if clashes {
                return Err(CliError::Input(format!("baseline label {} collides with a metric column", b.label)));
            }
        }
        Ok(())
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn labels(&self) -> Vec<String> {
        self.baselines.iter().map(|b| b.label.clone()).collect()
    }
}

/// What a stage reports back: one summary line plus any warnings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageOutcome {
    pub summary: String,
    pub warnings: Vec<String>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read(path).map(|b| decode_source(&b)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_artifact(cfg: &PipelineConfig, name: &str, producer: &str) -> Result<String, CliError> {
    let path = cfg.artifact(name);
    if !path.is_file() {
        return Err(CliError::Input(format!("{}: missing; run `varcomplex {producer}` first", path.display())));
    }
    read_text(&path)
}

fn write_artifact(cfg: &PipelineConfig, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Input(format!("{}: {e}", cfg.out.display())))?;
    let path = cfg.artifact(name);
    fs::write(&path, bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parse an assignment file: `OPTION=y|n` per line, `#` comments. Options
/// not listed are disabled.
pub fn parse_assignment(text: &str) -> Result<ConfigAssignment, String> {
    let mut cfg = ConfigAssignment::with_default(false);
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| format!("line {}: {m}: {raw:?}", i + 1);
        let (name, value) = line.split_once('=').ok_or_else(|| err("expected OPTION=y|n"))?;
        let name = OptionName::new(name.trim()).map_err(|_| err("invalid option name"))?;
        let value = match value.trim() {
            "y" => true,
            "n" => false,
            _ => return Err(err("value must be y or n")),
        };
        cfg.set(name, value);
    }
    Ok(cfg)
}

fn graph_options(g: &VariationalCallGraph) -> BTreeSet<OptionName> {
    let mut out = BTreeSet::new();
    for n in g.nodes.values() {
        out.extend(options_of(&n.pc));
    }
    for e in &g.edges {
        out.extend(options_of(&e.pc));
    }
    out
}

fn load_functions(cfg: &PipelineConfig) -> Result<Vec<ScannedSource>, CliError> {
    serde_json::from_str(&read_artifact(cfg, FUNCTIONS_JSON, "scan")?)
        .map_err(|e| CliError::Input(format!("{FUNCTIONS_JSON}: {e}")))
}

pub fn cmd_scan(cfg: &PipelineConfig) -> Result<StageOutcome, CliError> {
    let path = cfg.manifest.as_ref().ok_or_else(|| CliError::Input("scan needs --manifest".into()))?;
    let manifest =
        CorpusManifest::parse(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let stoplist = manifest.stoplist();
    let mut sources = Vec::new();
    let mut errors = Vec::new();
    for entry in &manifest.files {
        let file = manifest.resolve(base, entry);
        let content = match fs::read(&file) {
            Ok(bytes) => decode_source(&bytes),
            Err(e) => {
                errors.push(format!("{}: {e}", file.display()));
                continue;
            }
        };
        let source = SourceFile::new(entry.path.clone(), content).with_pc(entry.file_pc.clone());
        match scan_source(&source, &stoplist) {
            Ok(s) => sources.push(s),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Input(errors.join("\n")));
    }
    let mut json = serde_json::to_string_pretty(&sources).map_err(internal)?;
    json.push('\n');
    write_artifact(cfg, FUNCTIONS_JSON, json.as_bytes())?;
    let count: usize = sources.iter().map(|s| s.functions.len()).sum();
    Ok(StageOutcome { summary: format!("scan: {} files, {count} functions", sources.len()), warnings: vec![] })
}

pub fn cmd_graph(cfg: &PipelineConfig) -> Result<StageOutcome, CliError> {
    let sources = load_functions(cfg)?;
    let g = build(&sources).map_err(|e| match e {
        GraphError::DuplicateNode(_) | GraphError::Condition { .. } => input(e),
        _ => internal(e),
    })?;
    let json = export(&g, ExportFormat::Json);
    // the export must survive its own validation
    import_json(&json).map_err(|e| CliError::Internal(format!("exported graph fails validation: {e}")))?;
    write_artifact(cfg, GRAPH_JSON, json.as_bytes())?;
    if cfg.dot {
        write_artifact(cfg, GRAPH_DOT, export(&g, ExportFormat::Dot).as_bytes())?;
    }
    let warnings =
        g.unresolved.iter().map(|u| format!("unresolved call {} -> {} (line {})", u.from, u.callee, u.line)).collect();
    Ok(StageOutcome {
        summary: format!(
            "graph: {} nodes, {} edges, {} unresolved calls",
            g.nodes.len(),
            g.edges.len(),
            g.unresolved.len()
        ),
        warnings,
    })
}

pub fn cmd_labels(cfg: &PipelineConfig) -> Result<StageOutcome, CliError> {
    let functions: Vec<FunctionRecord> = load_functions(cfg)?.into_iter().flat_map(|s| s.functions).collect();
    let mut cves = match &cfg.cve_manifest {
        Some(p) => parse_cve_manifest(&read_text(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    if let Some(p) = &cfg.commit_log {
        let commits = scan_commit_log(&read_text(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        cves = merge_commit_log(cves, &commits);
    }
    let (labels, warnings) = label_functions(&functions, &cves);
    let mut csv = Vec::new();
    write_label_csv(&labels, &mut csv).map_err(internal)?;
    write_artifact(cfg, LABELS_CSV, &csv)?;
    let sidecar: String = warnings.iter().map(|w| format!("{w}\n")).collect();
    write_artifact(cfg, LABEL_WARNINGS, sidecar.as_bytes())?;
    let vulnerable = labels.iter().filter(|l| l.vulnerable).count();
    Ok(StageOutcome { summary: format!("labels: {vulnerable} vulnerable / {} functions", labels.len()), warnings })
}

fn load_labels(cfg: &PipelineConfig) -> Result<Option<BTreeMap<String, bool>>, CliError> {
    let path = cfg.artifact(LABELS_CSV);
    if !path.is_file() {
        return Ok(None);
    }
    read_label_csv(read_text(&path)?.as_bytes()).map(Some).map_err(|e| CliError::Input(format!("{LABELS_CSV}: {e}")))
}

pub fn cmd_metrics(cfg: &PipelineConfig) -> Result<StageOutcome, CliError> {
    let g = import_json(&read_artifact(cfg, GRAPH_JSON, "graph")?)
        .map_err(|e| CliError::Input(format!("{GRAPH_JSON}: {e}")))?;
    let known = graph_options(&g);
    let mut warnings = Vec::new();
    let mut baselines = Vec::new();
    for b in &cfg.baselines {
        let assignment = match &b.source {
            BaselineSource::AllYes => ConfigAssignment::all_yes(),
            BaselineSource::File(p) => {
                let a =
                    parse_assignment(&read_text(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                for name in a.bindings.keys().filter(|n| !known.contains(*n)) {
                    warnings.push(format!("{}: option {} does not occur in the corpus", p.display(), name.as_str()));
                }
                a
            }
        };
        baselines.push((b.label.clone(), assignment));
    }
    let labels = load_labels(cfg)?.unwrap_or_default();
    let (rows, table_warnings) = metric_table(&g, &baselines, &labels, cfg.betweenness_mode).map_err(internal)?;
    warnings.extend(table_warnings);
    let mut csv = Vec::new();
    write_metric_csv(&rows, &cfg.labels(), &mut csv).map_err(internal)?;
    write_artifact(cfg, METRICS_CSV, &csv)?;
    let names = if cfg.baselines.is_empty() { "none".to_string() } else { cfg.labels().join(", ") };
    Ok(StageOutcome { summary: format!("metrics: {} functions, baselines: {names}", rows.len()), warnings })
}

fn load_metrics(cfg: &PipelineConfig) -> Result<(Vec<MetricRow>, Vec<String>), CliError> {
    let text = read_artifact(cfg, METRICS_CSV, "metrics")?;
    read_metric_csv(text.as_bytes()).map_err(|e: MetricsError| CliError::Input(format!("{METRICS_CSV}: {e}")))
}

pub fn cmd_stats(cfg: &PipelineConfig) -> Result<StageOutcome, CliError> {
    let (mut rows, labels) = load_metrics(cfg)?;
    if let Some(l) = load_labels(cfg)? {
        for r in &mut rows {
            r.vulnerable = l.get(&r.id).copied();
        }
    }
    let reports = analyze(&rows, &labels, &cfg.stats);
    let mut json = Vec::new();
    write_stats_json(&reports, &mut json).map_err(internal)?;
    write_artifact(cfg, STATS_JSON, &json)?;
    let mut csv = Vec::new();
    write_stats_csv(&reports, &mut csv).map_err(internal)?;
    write_artifact(cfg, STATS_CSV, &csv)?;
    let mut warnings = Vec::new();
    for r in &reports {
        if let Some(e) = &r.error {
            warnings.push(format!("{}: {e}", r.metric));
        }
        if let Some(e) = &r.bootstrap_error {
            warnings.push(format!("{} bootstrap: {e}", r.metric));
        }
        for c in &r.confound {
            if let Some(e) = &c.error {
                warnings.push(format!("{} controlled by {}: {e}", r.metric, c.control));
            }
            for w in c.report.iter().flat_map(|x| &x.warnings) {
                warnings.push(format!("{} controlled by {}: {w}", r.metric, c.control));
            }
        }
    }
    let failed = reports.iter().filter(|r| r.error.is_some()).count();
    Ok(StageOutcome { summary: format!("stats: {} metrics, {failed} without a test", reports.len()), warnings })
}

/// Bin index of `x` on the log10(1 + x) scale; negative values fall in bin 0.
pub fn density_bin(x: f64) -> usize {
    ((x.max(0.0) + 1.0).log10() / DENSITY_BIN_WIDTH).floor() as usize
}

/// `metric,group,bin_low,bin_high,count`; bins are contiguous from zero up
/// to the highest occupied one for each metric and group.
pub fn density_table(rows: &[MetricRow], metrics: &[String]) -> String {
    let mut out = String::from("metric,group,bin_low,bin_high,count\n");
    for m in metrics {
        for (group, flag) in [("vulnerable", true), ("non_vulnerable", false)] {
            let mut counts: Vec<usize> = Vec::new();
            for v in rows.iter().filter(|r| r.vulnerable == Some(flag)).filter_map(|r| r.value(m)) {
                let b = density_bin(v);
                if counts.len() <= b {
                    counts.resize(b + 1, 0);
                }
                counts[b] += 1;
            }
            for (b, c) in counts.iter().enumerate() {
                let lo = b as f64 * DENSITY_BIN_WIDTH;
                let _ = writeln!(out, "{m},{group},{},{},{c}", fmt_sig12(lo), fmt_sig12(lo + DENSITY_BIN_WIDTH));
            }
        }
    }
    out
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig12).unwrap_or_else(|| "n/a".into())
}

pub fn render_report(reports: &[MetricReport]) -> String {
    if reports.is_empty() {
        return "no statistics available\n".into();
    }
    let mut out = String::new();
    for r in reports {
        let _ = write!(out, "{}: ", r.metric);
        let (Some(n), Some(means)) = (r.n, r.group_means) else {
            let _ = writeln!(out, "not compared ({})", r.error.as_deref().unwrap_or("no data"));
            continue;
        };
        let _ = writeln!(
            out,
            "vulnerable mean {} (n={}), non-vulnerable mean {} (n={})",
            fmt_sig12(means.vulnerable),
            n.vulnerable,
            fmt_sig12(means.non_vulnerable),
            n.non_vulnerable
        );
        match (r.t, r.ci95) {
            (Some(t), Some([lo, hi])) => {
                let _ = writeln!(
                    out,
                    "  ratio {}, difference {} (95% CI {} to {}), t = {}, df = {}, p = {}",
                    opt(r.ratio_of_means),
                    opt(r.mean_diff),
                    fmt_sig12(lo),
                    fmt_sig12(hi),
                    fmt_sig12(t),
                    opt(r.df),
                    opt(r.p)
                );
            }
            _ => {
                let _ = writeln!(out, "  no t-test ({})", r.error.as_deref().unwrap_or("unknown"));
            }
        }
        if let Some(b) = &r.bootstrap {
            let _ = writeln!(
                out,
                "  bootstrap B={} ({}): observed t at null percentile {}",
                b.b,
                b.transform,
                fmt_sig12(b.percentile)
            );
        }
        for c in &r.confound {
            match &c.report {
                Some(x) => {
                    let _ = writeln!(
                        out,
                        "  with {}: r = {}, odds ratio per sd {} -> {} ({}% change), deviance chi2 = {}, p = {}",
                        c.control,
                        opt(c.correlation),
                        fmt_sig12(x.or_per_sd_uni),
                        opt(x.or_per_sd_adj),
                        opt(x.pct_change),
                        opt(x.deviance_chi2),
                        opt(x.p_deviance)
                    );
                }
                None => {
                    let _ =
                        writeln!(out, "  with {}: not fitted ({})", c.control, c.error.as_deref().unwrap_or("unknown"));
                }
            }
        }
    }
    out
}

pub fn cmd_report(cfg: &PipelineConfig) -> Result<StageOutcome, CliError> {
    let stats_path = cfg.artifact(STATS_JSON);
    let reports: Vec<MetricReport> = if stats_path.is_file() {
        serde_json::from_str(&read_text(&stats_path)?).map_err(|e| CliError::Input(format!("{STATS_JSON}: {e}")))?
    } else {
        Vec::new()
    };
    let density = if cfg.artifact(METRICS_CSV).is_file() {
        let (mut rows, labels) = load_metrics(cfg)?;
        if let Some(l) = load_labels(cfg)? {
            for r in &mut rows {
                r.vulnerable = l.get(&r.id).copied();
            }
        }
        density_table(&rows, &stats_metrics(&labels))
    } else {
        density_table(&[], &[])
    };
    write_artifact(cfg, REPORT_TXT, render_report(&reports).as_bytes())?;
    write_artifact(cfg, DENSITY_CSV, density.as_bytes())?;
    Ok(StageOutcome { summary: format!("report: {} metrics", reports.len()), warnings: vec![] })
}

/// scan, graph, labels, metrics, stats, report.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<Vec<StageOutcome>, CliError> {
    type Stage = fn(&PipelineConfig) -> Result<StageOutcome, CliError>;
    let stages: [Stage; 6] = [cmd_scan, cmd_graph, cmd_labels, cmd_metrics, cmd_stats, cmd_report];
    stages.iter().map(|stage| stage(cfg)).collect()
}
