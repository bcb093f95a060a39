//! Per-function configuration-complexity metrics.
//!
//! Simple metrics come straight from the scan: internal `#ifdef` groups,
//! internal options, and external options (options of the node's presence
//! condition). Structural metrics are degree, eigenvector, and betweenness
//! centrality on the configuration-weighted variational call graph, each
//! paired with an unweighted baseline on one projected configuration.

pub mod centrality;

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use centrality::{betweenness, eigenvector, strengths, CentralityError, Digraph, DistanceMode, EigenResult};

use crate::pcalg::{option_count, ConfigAssignment};
use crate::vargraph::{project, ProjectedGraph, VariationalCallGraph, VcgNode};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Centrality(#[from] CentralityError),
    #[error("metric table: {0}")]
    Csv(#[from] csv::Error),
    #[error("metric table: {0}")]
    Io(#[from] io::Error),
    #[error("metric table: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralityMode {
    Weighted,
    Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores {
    pub scores: BTreeMap<String, f64>,
    pub mode: CentralityMode,
    pub config: Option<ConfigAssignment>,
    /// Eigenvector only: the graph has no directed cycle.
    pub degenerate: bool,
    /// Eigenvector only: power iteration met its tolerance.
    pub converged: bool,
}

impl CentralityScores {
    fn from_values(
        ids: &[String],
        values: impl IntoIterator<Item = f64>,
        mode: CentralityMode,
        config: Option<&ConfigAssignment>,
    ) -> Self {
        CentralityScores {
            scores: ids.iter().cloned().zip(values).collect(),
            mode,
            config: config.cloned(),
            degenerate: false,
            converged: true,
        }
    }

    pub fn get(&self, id: &str) -> f64 {
        self.scores.get(id).copied().unwrap_or(0.0)
    }
}

pub fn external_option_count(node: &VcgNode) -> usize {
    option_count(&node.pc)
}

pub fn weighted_degree(g: &VariationalCallGraph) -> (CentralityScores, CentralityScores) {
    let d = Digraph::weighted(g);
    let (din, dout) = strengths(&d);
    (
        CentralityScores::from_values(&d.ids, din.into_iter().map(|x| x as f64), CentralityMode::Weighted, None),
        CentralityScores::from_values(&d.ids, dout.into_iter().map(|x| x as f64), CentralityMode::Weighted, None),
    )
}

pub fn baseline_degree(p: &ProjectedGraph) -> (CentralityScores, CentralityScores) {
    let d = Digraph::unweighted(p);
    let (din, dout) = strengths(&d);
    let cfg = Some(&p.config);
    (
        CentralityScores::from_values(&d.ids, din.into_iter().map(|x| x as f64), CentralityMode::Baseline, cfg),
        CentralityScores::from_values(&d.ids, dout.into_iter().map(|x| x as f64), CentralityMode::Baseline, cfg),
    )
}

pub fn eigenvector_centrality(
    d: &Digraph,
    mode: CentralityMode,
    config: Option<&ConfigAssignment>,
) -> CentralityScores {
    let r = eigenvector(d);
    let mut s = CentralityScores::from_values(&d.ids, r.values, mode, config);
    s.degenerate = r.degenerate;
    s.converged = r.converged;
    s
}

pub fn betweenness_centrality(
    d: &Digraph,
    distance: DistanceMode,
    mode: CentralityMode,
    config: Option<&ConfigAssignment>,
) -> Result<CentralityScores, CentralityError> {
    Ok(CentralityScores::from_values(&d.ids, betweenness(d, distance)?, mode, config))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineMetrics {
    pub label: String,
    pub in_degree: u64,
    pub out_degree: u64,
    pub eigen: f64,
    pub between: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub id: String,
    pub file: String,
    pub name: String,
    pub size_loc: usize,
    pub internal_ifdefs: usize,
    pub internal_options: usize,
    pub external_options: usize,
    pub w_in_degree: u64,
    pub w_out_degree: u64,
    pub w_eigen: f64,
    pub w_between: f64,
    pub baselines: Vec<BaselineMetrics>,
    pub vulnerable: Option<bool>,
}

pub const SIMPLE_METRICS: [&str; 4] = ["size_loc", "internal_ifdefs", "internal_options", "external_options"];
pub const WEIGHTED_METRICS: [&str; 4] = ["w_in_deg", "w_out_deg", "w_eigen", "w_between"];
pub const BASELINE_SUFFIXES: [&str; 4] = ["in_deg", "out_deg", "eigen", "between"];

impl MetricRow {
    /// Value of a CSV column; baseline columns are `<label>_<suffix>`.
    pub fn value(&self, column: &str) -> Option<f64> {
        Some(match column {
            "size_loc" => self.size_loc as f64,
            "internal_ifdefs" => self.internal_ifdefs as f64,
            "internal_options" => self.internal_options as f64,
            "external_options" => self.external_options as f64,
            "w_in_deg" => self.w_in_degree as f64,
            "w_out_deg" => self.w_out_degree as f64,
            "w_eigen" => self.w_eigen,
            "w_between" => self.w_between,
            _ => {
                return self.baselines.iter().find_map(|b| {
                    let suffix = column.strip_prefix(b.label.as_str())?.strip_prefix('_')?;
                    Some(match suffix {
                        "in_deg" => b.in_degree as f64,
                        "out_deg" => b.out_degree as f64,
                        "eigen" => b.eigen,
                        "between" => b.between,
                        _ => return None,
                    })
                })
            }
        })
    }
}

/// Computes one row per node. Labels for ids not in the graph are reported
/// as warnings.
pub fn metric_table(
    g: &VariationalCallGraph,
    baselines: &[(String, ConfigAssignment)],
    labels: &BTreeMap<String, bool>,
    distance: DistanceMode,
) -> Result<(Vec<MetricRow>, Vec<String>), MetricsError> {
    let weighted = Digraph::weighted(g);
    let (w_in, w_out) = weighted_degree(g);
    let w_eigen = eigenvector_centrality(&weighted, CentralityMode::Weighted, None);
    let w_between = betweenness_centrality(&weighted, distance, CentralityMode::Weighted, None)?;
    let mut warnings = Vec::new();
    if !w_eigen.converged {
        warnings.push("weighted eigenvector centrality did not converge".to_string());
    }

    let mut base = Vec::new();
    for (label, cfg) in baselines {
        let p = project(g, cfg);
        let d = Digraph::unweighted(&p);
        let (bin, bout) = baseline_degree(&p);
        let eig = eigenvector_centrality(&d, CentralityMode::Baseline, Some(cfg));
        if !eig.converged {
            warnings.push(format!("{label} eigenvector centrality did not converge"));
        }
        let btw = betweenness_centrality(&d, distance, CentralityMode::Baseline, Some(cfg))?;
        base.push((label.clone(), bin, bout, eig, btw));
    }

    for id in labels.keys() {
        if !g.nodes.contains_key(id) {
            warnings.push(format!("label for unknown function {id}"));
        }
    }

    let rows = g
        .nodes
        .values()
        .map(|n| MetricRow {
            id: n.id.clone(),
            file: n.file.clone(),
            name: n.name.clone(),
            size_loc: n.size_loc,
            internal_ifdefs: n.internal_ifdef_count,
            internal_options: n.internal_option_count,
            external_options: external_option_count(n),
            w_in_degree: w_in.get(&n.id) as u64,
            w_out_degree: w_out.get(&n.id) as u64,
            w_eigen: w_eigen.get(&n.id),
            w_between: w_between.get(&n.id),
            baselines: base
                .iter()
                .map(|(label, bin, bout, eig, btw)| BaselineMetrics {
                    label: label.clone(),
                    in_degree: bin.get(&n.id) as u64,
                    out_degree: bout.get(&n.id) as u64,
                    eigen: eig.get(&n.id),
                    between: btw.get(&n.id),
                })
                .collect(),
            vulnerable: labels.get(&n.id).copied(),
        })
        .collect();
    Ok((rows, warnings))
}

/// `%.12g`-style rendering: 12 significant digits, trailing zeros trimmed.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (11 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_header(labels: &[String]) -> Vec<String> {
    let mut h: Vec<String> = ["id", "file", "name"].iter().map(|s| s.to_string()).collect();
    h.extend(SIMPLE_METRICS.iter().map(|s| s.to_string()));
    h.extend(WEIGHTED_METRICS.iter().map(|s| s.to_string()));
    for l in labels {
        h.extend(BASELINE_SUFFIXES.iter().map(|s| format!("{l}_{s}")));
    }
    h.push("vulnerable".into());
    h
}

/// Write rows sorted by id.
pub fn write_metric_csv<W: io::Write>(rows: &[MetricRow], labels: &[String], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(labels))?;
    let mut sorted: Vec<&MetricRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for r in sorted {
        let mut rec = vec![
            r.id.clone(),
            r.file.clone(),
            r.name.clone(),
            r.size_loc.to_string(),
            r.internal_ifdefs.to_string(),
            r.internal_options.to_string(),
            r.external_options.to_string(),
            r.w_in_degree.to_string(),
            r.w_out_degree.to_string(),
            fmt_sig12(r.w_eigen),
            fmt_sig12(r.w_between),
        ];
        for l in labels {
            let b = r
                .baselines
                .iter()
                .find(|b| &b.label == l)
                .ok_or_else(|| MetricsError::Format(format!("row {} lacks baseline {l}", r.id)))?;
            rec.extend([b.in_degree.to_string(), b.out_degree.to_string(), fmt_sig12(b.eigen), fmt_sig12(b.between)]);
        }
        rec.push(match r.vulnerable {
            Some(true) => "true".into(),
            Some(false) => "false".into(),
            None => String::new(),
        });
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a metric table written by [`write_metric_csv`]; returns the rows
/// and the baseline labels in column order.
pub fn read_metric_csv<R: io::Read>(input: R) -> Result<(Vec<MetricRow>, Vec<String>), MetricsError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let fixed = 3 + SIMPLE_METRICS.len() + WEIGHTED_METRICS.len();
    if header.len() < fixed + 1 || !(header.len() - fixed - 1).is_multiple_of(4) {
        return Err(MetricsError::Format(format!("unexpected header with {} columns", header.len())));
    }
    let mut labels = Vec::new();
    for chunk in header[fixed..header.len() - 1].chunks(4) {
        let label = chunk[0]
            .strip_suffix("_in_deg")
            .ok_or_else(|| MetricsError::Format(format!("bad baseline column {}", chunk[0])))?
            .to_string();
        labels.push(label);
    }
    if csv_header(&labels) != header {
        return Err(MetricsError::Format("header does not match the metric table layout".into()));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let int = |i: usize| -> Result<u64, MetricsError> {
            rec[i]
                .parse()
                .map_err(|_| MetricsError::Format(format!("column {} of {}: {:?}", header[i], &rec[0], &rec[i])))
        };
        let real = |i: usize| -> Result<f64, MetricsError> {
            rec[i]
                .parse()
                .map_err(|_| MetricsError::Format(format!("column {} of {}: {:?}", header[i], &rec[0], &rec[i])))
        };
        let baselines = labels
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let c = fixed + 4 * k;
                Ok(BaselineMetrics {
                    label: l.clone(),
                    in_degree: int(c)?,
                    out_degree: int(c + 1)?,
                    eigen: real(c + 2)?,
                    between: real(c + 3)?,
                })
            })
            .collect::<Result<Vec<_>, MetricsError>>()?;
        let vulnerable = match &rec[header.len() - 1] {
            "true" => Some(true),
            "false" => Some(false),
            "" => None,
            other => return Err(MetricsError::Format(format!("vulnerable column of {}: {other:?}", &rec[0]))),
        };
        rows.push(MetricRow {
            id: rec[0].to_string(),
            file: rec[1].to_string(),
            name: rec[2].to_string(),
            size_loc: int(3)? as usize,
            internal_ifdefs: int(4)? as usize,
            internal_options: int(5)? as usize,
            external_options: int(6)? as usize,
            w_in_degree: int(7)?,
            w_out_degree: int(8)?,
            w_eigen: real(9)?,
            w_between: real(10)?,
            baselines,
            vulnerable,
        });
    }
    Ok((rows, labels))
}
