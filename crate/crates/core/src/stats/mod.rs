//! Vulnerable vs. non-vulnerable comparisons of metric samples.

mod bootstrap;
mod dist;
mod logistic;
mod report;
mod ttest;

use thiserror::Error;

pub use bootstrap::{bootstrap_null, percentile_of, BootstrapResult, Transform, MAX_REDRAWS, MIN_REPLICATES};
pub use dist::{chisq_cdf, chisq_sf, t_cdf, t_quantile, t_two_sided_p};
pub use logistic::{
    confound_analysis, design_matrix, logistic_fit, pct_change, ConfoundReport, LogisticModel, IRLS_MAX_ITERATIONS,
    IRLS_TOLERANCE,
};
pub use report::{
    analyze, confound_pairings, stats_metrics, write_stats_csv, write_stats_json, BootstrapSummary, ConfoundEntry,
    GroupPair, MetricReport, StatsOptions,
};
pub use ttest::{pearson, welch_from_summaries, welch_t_test, CorrelationResult, SampleSummary, TTestResult};

use crate::metrics::MetricRow;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sample too small: need at least {need} values, got {got}")]
    TooSmall { need: usize, got: usize },
    #[error("both samples have zero variance")]
    DegenerateSamples,
    #[error("zero variance")]
    ZeroVariance,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("outcome has a single class")]
    SingleClass,
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("bootstrap draws stayed degenerate after {attempts} attempts")]
    DegenerateBootstrap { attempts: usize },
    #[error("the {0} group is empty")]
    EmptyGroup(&'static str),
    #[error("unknown metric column {0:?}")]
    UnknownMetric(String),
    #[error("stats report: {0}")]
    Output(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupComparison {
    pub metric: String,
    pub vulnerable: SampleSummary,
    pub non_vulnerable: SampleSummary,
    /// Vulnerable minus non-vulnerable.
    pub ttest: TTestResult,
    pub bootstrap: Option<BootstrapResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapOptions {
    pub b: usize,
    pub transform: Transform,
    pub seed: u64,
}

/// Metric values split by label; unlabeled rows are skipped.
pub fn split_groups(rows: &[MetricRow], metric: &str) -> Result<(Vec<f64>, Vec<f64>), StatsError> {
    let mut vulnerable = Vec::new();
    let mut other = Vec::new();
    for r in rows {
        let Some(label) = r.vulnerable else { continue };
        let v = r.value(metric).ok_or_else(|| StatsError::UnknownMetric(metric.to_string()))?;
        if label {
            vulnerable.push(v);
        } else {
            other.push(v);
        }
    }
    if rows.iter().all(|r| r.value(metric).is_none()) && !rows.is_empty() {
        return Err(StatsError::UnknownMetric(metric.to_string()));
    }
    if vulnerable.is_empty() {
        return Err(StatsError::EmptyGroup("vulnerable"));
    }
    if other.is_empty() {
        return Err(StatsError::EmptyGroup("non-vulnerable"));
    }
    Ok((vulnerable, other))
}

pub fn group_compare(
    rows: &[MetricRow],
    metric: &str,
    bootstrap: Option<BootstrapOptions>,
) -> Result<GroupComparison, StatsError> {
    let (vulnerable, other) = split_groups(rows, metric)?;
    let ttest = welch_t_test(&vulnerable, &other)?;
    let bootstrap = bootstrap.map(|o| bootstrap_null(&other, &vulnerable, o.b, o.transform, o.seed)).transpose()?;
    Ok(GroupComparison {
        metric: metric.to_string(),
        vulnerable: SampleSummary::of(&vulnerable)?,
        non_vulnerable: SampleSummary::of(&other)?,
        ttest,
        bootstrap,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn row(id: &str, ifdefs: usize, size: usize, vulnerable: Option<bool>) -> MetricRow {
        MetricRow {
            id: id.into(),
            file: "a.c".into(),
            name: id.into(),
            size_loc: size,
            internal_ifdefs: ifdefs,
            internal_options: ifdefs,
            external_options: 0,
            w_in_degree: 0,
            w_out_degree: 0,
            w_eigen: 0.0,
            w_between: 0.0,
            baselines: vec![],
            vulnerable,
        }
    }

    #[test]
    fn empty_groups_are_named() {
        let rows: Vec<MetricRow> = (0..5).map(|i| row(&format!("f{i}"), i, 10, Some(false))).collect();
        let err = group_compare(&rows, "internal_ifdefs", None).unwrap_err();
        assert!(matches!(err, StatsError::EmptyGroup("vulnerable")));
        assert!(err.to_string().contains("vulnerable"));
        let rows: Vec<MetricRow> = (0..5).map(|i| row(&format!("f{i}"), i, 10, Some(true))).collect();
        assert!(matches!(group_compare(&rows, "size_loc", None), Err(StatsError::EmptyGroup("non-vulnerable"))));
    }

    #[test]
    fn unknown_metric() {
        let rows = vec![row("a", 1, 2, Some(true)), row("b", 2, 3, Some(false))];
        assert!(matches!(group_compare(&rows, "nope", None), Err(StatsError::UnknownMetric(_))));
    }

    #[test]
    fn identical_groups_give_high_p() {
        let mut rows = Vec::new();
        for i in 0..40 {
            rows.push(row(&format!("v{i}"), i % 7, 10 + i, Some(true)));
            rows.push(row(&format!("n{i}"), i % 7, 10 + i, Some(false)));
        }
        let c = group_compare(&rows, "internal_ifdefs", None).unwrap();
        assert!(c.ttest.p_two_sided > 0.9);
        assert_eq!(c.vulnerable.n, 40);
    }

    #[test]
    fn unlabeled_rows_are_skipped() {
        let rows = vec![
            row("a", 1, 2, Some(true)),
            row("b", 3, 2, Some(true)),
            row("c", 0, 2, Some(false)),
            row("d", 1, 2, Some(false)),
            row("e", 100, 2, None),
        ];
        let c = group_compare(&rows, "internal_ifdefs", None).unwrap();
        assert_eq!((c.vulnerable.n, c.non_vulnerable.n), (2, 2));
        assert_eq!(c.ttest.ratio_of_means, Some(4.0));
    }
}
