//! Per-metric statistics over a labeled metric table, written as JSON and
//! as a flat CSV.

use std::io;

use serde::{Deserialize, Serialize};

use super::{
    bootstrap_null, confound_analysis, pearson, split_groups, welch_t_test, ConfoundReport, SampleSummary, StatsError,
    Transform,
};
use crate::metrics::{fmt_sig12, MetricRow, BASELINE_SUFFIXES, SIMPLE_METRICS, WEIGHTED_METRICS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatsOptions {
    /// Bootstrap replicates; 0 disables the bootstrap.
    pub bootstrap_b: usize,
    pub transform: Transform,
    pub seed: u64,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions { bootstrap_b: 1000, transform: Transform::Identity, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupPair<T> {
    pub vulnerable: T,
    pub non_vulnerable: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    #[serde(rename = "B")]
    pub b: usize,
    pub observed_t: f64,
    pub percentile: f64,
    pub transform: Transform,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfoundEntry {
    pub control: String,
    /// Pearson r between the metric and the control over all labeled rows.
    pub correlation: Option<f64>,
    #[serde(flatten)]
    pub report: Option<ConfoundReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub n: Option<GroupPair<usize>>,
    pub group_means: Option<GroupPair<f64>>,
    pub group_sd: Option<GroupPair<f64>>,
    pub ratio_of_means: Option<f64>,
    pub mean_diff: Option<f64>,
    pub ci95: Option<[f64; 2]>,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p: Option<f64>,
    pub bootstrap: Option<BootstrapSummary>,
    pub bootstrap_error: Option<String>,
    pub confound: Vec<ConfoundEntry>,
    pub error: Option<String>,
}

impl MetricReport {
    fn failed(metric: &str, error: String) -> Self {
        MetricReport {
            metric: metric.to_string(),
            n: None,
            group_means: None,
            group_sd: None,
            ratio_of_means: None,
            mean_diff: None,
            ci95: None,
            t: None,
            df: None,
            p: None,
            bootstrap: None,
            bootstrap_error: None,
            confound: Vec::new(),
            error: Some(error),
        }
    }
}

/// Metrics analyzed for a table with the given baseline labels, in order.
pub fn stats_metrics(labels: &[String]) -> Vec<String> {
    let mut out: Vec<String> = SIMPLE_METRICS.iter().chain(&WEIGHTED_METRICS).map(|s| s.to_string()).collect();
    for l in labels {
        out.extend(BASELINE_SUFFIXES.iter().map(|s| format!("{l}_{s}")));
    }
    out
}

/// (metric, control) pairs for the confounding analysis: the simple
/// configuration metrics against size, each weighted centrality against the
/// same centrality on every baseline configuration.
pub fn confound_pairings(labels: &[String]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> =
        SIMPLE_METRICS[1..].iter().map(|m| (m.to_string(), "size_loc".to_string())).collect();
    for (w, suffix) in WEIGHTED_METRICS.iter().zip(BASELINE_SUFFIXES) {
        for l in labels {
            out.push((w.to_string(), format!("{l}_{suffix}")));
        }
    }
    out
}

/// Metric values, control values and labels of the labeled rows.
type LabeledColumns = (Vec<f64>, Vec<f64>, Vec<bool>);

fn labeled_columns(rows: &[MetricRow], metric: &str, control: &str) -> Result<LabeledColumns, StatsError> {
    let mut m = Vec::new();
    let mut c = Vec::new();
    let mut y = Vec::new();
    for r in rows {
        let Some(label) = r.vulnerable else { continue };
        m.push(r.value(metric).ok_or_else(|| StatsError::UnknownMetric(metric.to_string()))?);
        c.push(r.value(control).ok_or_else(|| StatsError::UnknownMetric(control.to_string()))?);
        y.push(label);
    }
    Ok((m, c, y))
}

fn metric_report(rows: &[MetricRow], metric: &str, controls: &[&str], options: &StatsOptions) -> MetricReport {
    let (vulnerable, other) = match split_groups(rows, metric) {
        Ok(g) => g,
        Err(e) => return MetricReport::failed(metric, e.to_string()),
    };
    let summaries = SampleSummary::of(&vulnerable).and_then(|v| Ok((v, SampleSummary::of(&other)?)));
    let (sv, so) = match summaries {
        Ok(s) => s,
        Err(e) => return MetricReport::failed(metric, e.to_string()),
    };
    let mut report = MetricReport::failed(metric, String::new());
    report.error = None;
    report.n = Some(GroupPair { vulnerable: sv.n, non_vulnerable: so.n });
    report.group_means = Some(GroupPair { vulnerable: sv.mean, non_vulnerable: so.mean });
    report.group_sd = Some(GroupPair { vulnerable: sv.sd, non_vulnerable: so.sd });
    match welch_t_test(&vulnerable, &other) {
        Ok(t) => {
            report.ratio_of_means = t.ratio_of_means;
            report.mean_diff = Some(t.mean_diff);
            report.ci95 = Some([t.ci95_low, t.ci95_high]);
            report.t = Some(t.t);
            report.df = Some(t.df);
            report.p = Some(t.p_two_sided);
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    if options.bootstrap_b > 0 && report.t.is_some() {
        match bootstrap_null(&other, &vulnerable, options.bootstrap_b, options.transform, options.seed) {
            Ok(b) => {
                report.bootstrap = Some(BootstrapSummary {
                    b: b.b,
                    observed_t: b.observed_t,
                    percentile: b.percentile_of_observed,
                    transform: b.transform,
                    seed: b.seed,
                })
            }
            Err(e) => report.bootstrap_error = Some(e.to_string()),
        }
    }
    for control in controls {
        let entry = match labeled_columns(rows, metric, control) {
            Err(e) => ConfoundEntry {
                control: control.to_string(),
                correlation: None,
                report: None,
                error: Some(e.to_string()),
            },
            Ok((m, c, y)) => {
                let correlation = pearson(&m, &c).ok().map(|r| r.r);
                match confound_analysis(&m, &c, &y) {
                    Ok(r) => ConfoundEntry { control: control.to_string(), correlation, report: Some(r), error: None },
                    Err(e) => ConfoundEntry {
                        control: control.to_string(),
                        correlation,
                        report: None,
                        error: Some(e.to_string()),
                    },
                }
            }
        };
        report.confound.push(entry);
    }
    report
}

/// One report per analyzed metric. Failures are recorded per metric rather
/// than aborting the whole analysis.
pub fn analyze(rows: &[MetricRow], labels: &[String], options: &StatsOptions) -> Vec<MetricReport> {
    let pairings = confound_pairings(labels);
    stats_metrics(labels)
        .iter()
        .map(|m| {
            let controls: Vec<&str> = pairings.iter().filter(|(x, _)| x == m).map(|(_, c)| c.as_str()).collect();
            metric_report(rows, m, &controls, options)
        })
        .collect()
}

pub fn write_stats_json<W: io::Write>(reports: &[MetricReport], mut out: W) -> Result<(), StatsError> {
    serde_json::to_writer_pretty(&mut out, reports).map_err(|e| StatsError::Output(e.to_string()))?;
    out.write_all(b"\n").map_err(|e| StatsError::Output(e.to_string()))
}

const CSV_HEADER: [&str; 21] = [
    "metric",
    "n_vulnerable",
    "n_non_vulnerable",
    "mean_vulnerable",
    "mean_non_vulnerable",
    "ratio_of_means",
    "mean_diff",
    "ci95_low",
    "ci95_high",
    "t",
    "df",
    "p",
    "bootstrap_percentile",
    "control",
    "correlation",
    "or_per_sd_uni",
    "or_per_sd_adj",
    "pct_change",
    "deviance_chi2",
    "p_deviance",
    "error",
];

fn num(x: Option<f64>) -> String {
    x.map(fmt_sig12).unwrap_or_default()
}

/// Flat summary: one line per (metric, control) pair, or one line for a
/// metric without controls.
pub fn write_stats_csv<W: io::Write>(reports: &[MetricReport], out: W) -> Result<(), StatsError> {
    let err = |e: csv::Error| StatsError::Output(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in reports {
        let base = vec![
            r.metric.clone(),
            r.n.map(|n| n.vulnerable.to_string()).unwrap_or_default(),
            r.n.map(|n| n.non_vulnerable.to_string()).unwrap_or_default(),
            num(r.group_means.map(|g| g.vulnerable)),
            num(r.group_means.map(|g| g.non_vulnerable)),
            num(r.ratio_of_means),
            num(r.mean_diff),
            num(r.ci95.map(|c| c[0])),
            num(r.ci95.map(|c| c[1])),
            num(r.t),
            num(r.df),
            num(r.p),
            num(r.bootstrap.as_ref().map(|b| b.percentile)),
        ];
        let metric_error = r.error.clone().unwrap_or_default();
        if r.confound.is_empty() {
            let mut rec = base.clone();
            rec.extend(std::iter::repeat_n(String::new(), 7));
            rec.push(metric_error);
            w.write_record(rec).map_err(err)?;
        }
        for c in &r.confound {
            let rep = c.report.as_ref();
            let mut rec = base.clone();
            rec.extend([
                c.control.clone(),
                num(c.correlation),
                num(rep.map(|x| x.or_per_sd_uni)),
                num(rep.and_then(|x| x.or_per_sd_adj)),
                num(rep.and_then(|x| x.pct_change)),
                num(rep.and_then(|x| x.deviance_chi2)),
                num(rep.and_then(|x| x.p_deviance)),
            ]);
            let errors: Vec<&str> = [r.error.as_deref(), c.error.as_deref()].into_iter().flatten().collect();
            rec.push(errors.join("; "));
            w.write_record(rec).map_err(err)?;
        }
    }
    w.flush().map_err(|e| StatsError::Output(e.to_string()))
}
