//! Logistic regression by iteratively reweighted least squares, and the
//! univariate-vs-adjusted confounding check built on it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dist::chisq_sf;
use super::ttest::SampleSummary;
use super::StatsError;

pub const IRLS_TOLERANCE: f64 = 1e-8;
pub const IRLS_MAX_ITERATIONS: usize = 50;
const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Intercept first, then one coefficient per predictor column.
    pub coefficients: Vec<f64>,
    /// -2 log-likelihood.
    pub deviance: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Prepend the intercept column to per-predictor columns.
pub fn design_matrix(columns: &[&[f64]]) -> Vec<Vec<f64>> {
    let n = columns.first().map_or(0, |c| c.len());
    (0..n).map(|i| std::iter::once(1.0).chain(columns.iter().map(|c| c[i])).collect()).collect()
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn deviance(z: &DMatrix<f64>, gamma: &DVector<f64>, y: &[bool]) -> f64 {
    let eta = z * gamma;
    2.0 * y.iter().zip(eta.iter()).map(|(yi, e)| if *yi { softplus(-e) } else { softplus(*e) }).sum::<f64>()
}

/// Maximum-likelihood logistic fit. Predictor columns are standardized
/// internally; coefficients are reported on the original scale.
pub fn logistic_fit(design: &[Vec<f64>], y: &[bool]) -> Result<LogisticModel, StatsError> {
    let n = design.len();
    if n != y.len() {
        return Err(StatsError::LengthMismatch { left: n, right: y.len() });
    }
    let p = design.first().map_or(0, Vec::len);
    if p < 2 {
        return Err(StatsError::InvalidParameter("design needs an intercept and at least one predictor".into()));
    }
    if design.iter().any(|row| row.len() != p) {
        return Err(StatsError::InvalidParameter("design rows have different lengths".into()));
    }
    if design.iter().any(|row| row[0] != 1.0) {
        return Err(StatsError::InvalidParameter("first design column must be all ones".into()));
    }
    if design.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidParameter("design contains non-finite values".into()));
    }
    let positives = y.iter().filter(|v| **v).count();
    if positives == 0 || positives == n {
        return Err(StatsError::SingleClass);
    }

    let mut center = vec![0.0; p];
    let mut scale = vec![1.0; p];
    for j in 1..p {
        let col: Vec<f64> = design.iter().map(|r| r[j]).collect();
        let s = SampleSummary::of(&col)?;
        if s.sd == 0.0 {
            return Err(StatsError::RankDeficient);
        }
        center[j] = s.mean;
        scale[j] = s.sd;
    }
    let z = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { (design[i][j] - center[j]) / scale[j] });
    let sv = z.singular_values();
    if sv.min() <= RANK_TOLERANCE * sv.max() {
        return Err(StatsError::RankDeficient);
    }

    let original = |g: &DVector<f64>| -> Vec<f64> {
        let mut beta: Vec<f64> = (0..p).map(|j| g[j] / scale[j]).collect();
        beta[0] = g[0] - (1..p).map(|j| g[j] * center[j] / scale[j]).sum::<f64>();
        beta
    };
    let target = DVector::from_iterator(n, y.iter().map(|v| if *v { 1.0 } else { 0.0 }));
    let mut gamma = DVector::zeros(p);
    let mut beta = original(&gamma);
    let mut converged = false;
    let mut warning = None;
    let mut iterations = 0;
    while iterations < IRLS_MAX_ITERATIONS {
        let eta = &z * &gamma;
        let mu = eta.map(|e| 1.0 / (1.0 + (-e).exp()));
        let w = mu.map(|m| m * (1.0 - m));
        let mut zw = z.clone();
        for (mut row, wi) in zw.row_iter_mut().zip(w.iter()) {
            row *= *wi;
        }
        let h = z.transpose() * zw;
        let grad = z.transpose() * (&target - &mu);
        let Some(chol) = h.cholesky() else {
            warning = Some("information matrix became singular; coefficients are diverging (separation?)".into());
            break;
        };
        let next = &gamma + chol.solve(&grad);
        iterations += 1;
        if next.iter().any(|v| !v.is_finite()) {
            warning = Some("coefficients diverged to non-finite values (separation?)".into());
            break;
        }
        let next_beta = original(&next);
        let delta = next_beta.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        gamma = next;
        beta = next_beta;
        if delta < IRLS_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged && warning.is_none() {
        warning = Some(format!(
            "no convergence after {IRLS_MAX_ITERATIONS} iterations; coefficients are diverging (separation?)"
        ));
    }
    Ok(LogisticModel { coefficients: beta, deviance: deviance(&z, &gamma, y), iterations, converged, warning })
}

/// Percent drop from the univariate to the adjusted odds ratio.
pub fn pct_change(or_uni: f64, or_adj: f64) -> f64 {
    100.0 * (or_uni - or_adj) / or_uni
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfoundReport {
    pub beta_uni: f64,
    /// `None` when the adjusted model is rank deficient.
    pub beta_adj: Option<f64>,
    pub sd_metric: f64,
    pub or_per_sd_uni: f64,
    pub or_per_sd_adj: Option<f64>,
    pub pct_change: Option<f64>,
    pub deviance_chi2: Option<f64>,
    pub chi2_df: u32,
    pub p_deviance: Option<f64>,
    pub rank_deficient: bool,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Compare the metric's odds ratio per standard deviation with and without
/// the control, and test the metric's contribution over the control alone
/// by analysis of deviance.
pub fn confound_analysis(metric: &[f64], control: &[f64], y: &[bool]) -> Result<ConfoundReport, StatsError> {
    if metric.len() != control.len() {
        return Err(StatsError::LengthMismatch { left: metric.len(), right: control.len() });
    }
    let sd = SampleSummary::of(metric)?.sd;
    let uni = logistic_fit(&design_matrix(&[metric]), y)?;
    let mut warnings: Vec<String> = uni.warning.iter().map(|w| format!("univariate: {w}")).collect();
    let mut converged = uni.converged;
    let beta_uni = uni.coefficients[1];
    let mut report = ConfoundReport {
        beta_uni,
        beta_adj: None,
        sd_metric: sd,
        or_per_sd_uni: (beta_uni * sd).exp(),
        or_per_sd_adj: None,
        pct_change: None,
        deviance_chi2: None,
        chi2_df: 1,
        p_deviance: None,
        rank_deficient: false,
        converged,
        warnings: Vec::new(),
    };
    let fits = logistic_fit(&design_matrix(&[metric, control]), y)
        .and_then(|full| Ok((full, logistic_fit(&design_matrix(&[control]), y)?)));
    match fits {
        Err(StatsError::RankDeficient) => {
            report.rank_deficient = true;
            warnings.push("adjusted model is rank deficient (metric and control collinear or control constant)".into());
        }
        Err(e) => return Err(e),
        Ok((full, base)) => {
            for (name, m) in [("adjusted", &full), ("control-only", &base)] {
                converged &= m.converged;
                if let Some(w) = &m.warning {
                    warnings.push(format!("{name}: {w}"));
                }
            }
            let beta_adj = full.coefficients[1];
            let or_adj = (beta_adj * sd).exp();
            let chi2 = (base.deviance - full.deviance).max(0.0);
            report.beta_adj = Some(beta_adj);
            report.or_per_sd_adj = Some(or_adj);
            report.pct_change = Some(pct_change(report.or_per_sd_uni, or_adj));
            report.deviance_chi2 = Some(chi2);
            report.p_deviance = Some(chisq_sf(chi2, 1.0)?);
        }
    }
    report.converged = converged;
    report.warnings = warnings;
    Ok(report)
}
