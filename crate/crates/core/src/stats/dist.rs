//! Distribution functions used for p-values and confidence intervals.

use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use super::StatsError;

fn students_t(df: f64) -> Result<StudentsT, StatsError> {
    if df.is_nan() || df <= 0.0 {
        return Err(StatsError::InvalidParameter(format!("degrees of freedom must be positive, got {df}")));
    }
    StudentsT::new(0.0, 1.0, df).map_err(|e| StatsError::InvalidParameter(e.to_string()))
}

fn chi_squared(k: f64) -> Result<ChiSquared, StatsError> {
    if k.is_nan() || k <= 0.0 {
        return Err(StatsError::InvalidParameter(format!("chi-square degrees of freedom must be positive, got {k}")));
    }
    ChiSquared::new(k).map_err(|e| StatsError::InvalidParameter(e.to_string()))
}

pub fn t_cdf(t: f64, df: f64) -> Result<f64, StatsError> {
    let d = students_t(df)?;
    if t == 0.0 {
        return Ok(0.5);
    }
    Ok(d.cdf(t).clamp(0.0, 1.0))
}

/// P(|T| >= |t|).
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64, StatsError> {
    let d = students_t(df)?;
    Ok((2.0 * d.sf(t.abs())).clamp(0.0, 1.0))
}

pub fn t_quantile(p: f64, df: f64) -> Result<f64, StatsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::InvalidParameter(format!("probability must be in [0,1], got {p}")));
    }
    Ok(students_t(df)?.inverse_cdf(p))
}

pub fn chisq_cdf(x: f64, k: f64) -> Result<f64, StatsError> {
    let d = chi_squared(k)?;
    if x < 0.0 {
        return Err(StatsError::InvalidParameter(format!("chi-square argument must be nonnegative, got {x}")));
    }
    Ok(d.cdf(x).clamp(0.0, 1.0))
}

pub fn chisq_sf(x: f64, k: f64) -> Result<f64, StatsError> {
    let d = chi_squared(k)?;
    if x < 0.0 {
        return Err(StatsError::InvalidParameter(format!("chi-square argument must be nonnegative, got {x}")));
    }
    Ok(d.sf(x).clamp(0.0, 1.0))
}
