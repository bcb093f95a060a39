//! Welch two-sample t-test and Pearson correlation.

use serde::{Deserialize, Serialize};

use super::dist::{t_quantile, t_two_sided_p};
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
}

impl SampleSummary {
    pub fn of(values: &[f64]) -> Result<SampleSummary, StatsError> {
        if values.is_empty() {
            return Err(StatsError::TooSmall { need: 1, got: 0 });
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        // guard against rounding noise on constant samples
        let sd = if values.iter().all(|v| *v == values[0]) { 0.0 } else { sd };
        Ok(SampleSummary { n, mean, sd })
    }

    fn var_of_mean(&self) -> f64 {
        self.sd * self.sd / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
    pub mean_diff: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    /// mean(x) / mean(y); `None` when mean(y) is zero.
    pub ratio_of_means: Option<f64>,
}

/// Welch's unequal-variance t-test of mean(x) - mean(y).
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<TTestResult, StatsError> {
    for s in [x, y] {
        if s.len() < 2 {
            return Err(StatsError::TooSmall { need: 2, got: s.len() });
        }
    }
    welch_from_summaries(&SampleSummary::of(x)?, &SampleSummary::of(y)?)
}

/// The t statistic alone, without the distribution lookups.
pub(crate) fn welch_statistic(sx: &SampleSummary, sy: &SampleSummary) -> Result<f64, StatsError> {
    let (vx, vy) = (sx.var_of_mean(), sy.var_of_mean());
    if vx == 0.0 && vy == 0.0 {
        return Err(StatsError::DegenerateSamples);
    }
    Ok((sx.mean - sy.mean) / (vx + vy).sqrt())
}

pub fn welch_from_summaries(sx: &SampleSummary, sy: &SampleSummary) -> Result<TTestResult, StatsError> {
    let t = welch_statistic(sx, sy)?;
    let (vx, vy) = (sx.var_of_mean(), sy.var_of_mean());
    let se = (vx + vy).sqrt();
    let mean_diff = sx.mean - sy.mean;
    let df = (vx + vy).powi(2) / (vx * vx / (sx.n - 1) as f64 + vy * vy / (sy.n - 1) as f64);
    let p = t_two_sided_p(t, df)?;
    let half = t_quantile(0.975, df)? * se;
    Ok(TTestResult {
        t,
        df,
        p_two_sided: p,
        mean_diff,
        ci95_low: mean_diff - half,
        ci95_high: mean_diff + half,
        ratio_of_means: (sy.mean != 0.0).then(|| sx.mean / sy.mean),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 3 {
        return Err(StatsError::TooSmall { need: 3, got: x.len() });
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(CorrelationResult { r: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0), n: x.len() })
}
