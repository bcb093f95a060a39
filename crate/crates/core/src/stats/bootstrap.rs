//! Bootstrap null distribution of the Welch t statistic: subsamples of the
//! pool tested against the whole pool, where the null holds by construction.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ttest::{welch_statistic, SampleSummary};
use super::StatsError;

pub const MIN_REPLICATES: usize = 100;
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    Identity,
    /// ln(1 + x)
    Log1p,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Log1p => x.ln_1p(),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::Identity => "identity",
            Transform::Log1p => "log1p",
        })
    }
}

impl FromStr for Transform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "identity" => Ok(Transform::Identity),
            "log1p" => Ok(Transform::Log1p),
            _ => Err(format!("unknown transform {s:?} (expected identity or log1p)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    #[serde(rename = "B")]
    pub b: usize,
    pub null_t: Vec<f64>,
    pub observed_t: f64,
    /// Mid-rank position of `observed_t` within `null_t`.
    pub percentile_of_observed: f64,
    pub transform: Transform,
    pub seed: u64,
}

/// Mid-rank percentile of `value` among `sorted`.
pub fn percentile_of(sorted: &[f64], value: f64) -> f64 {
    let below = sorted.partition_point(|v| *v < value);
    let upto = sorted.partition_point(|v| *v <= value);
    (below as f64 + 0.5 * (upto - below) as f64) / sorted.len() as f64
}

/// Null distribution of t for samples of `observed.len()` drawn without
/// replacement from `pool`, each tested against the entire pool. The
/// observed statistic is `observed` tested against the pool. Iteration `i`
/// draws from ChaCha8 stream `i` of `seed`, so replicates are independent of
/// evaluation order.
pub fn bootstrap_null(
    pool: &[f64],
    observed: &[f64],
    b: usize,
    transform: Transform,
    seed: u64,
) -> Result<BootstrapResult, StatsError> {
    let n = observed.len();
    if n < 2 {
        return Err(StatsError::TooSmall { need: 2, got: n });
    }
    if n >= pool.len() {
        return Err(StatsError::InvalidParameter(format!(
            "sample size {n} must be smaller than the pool ({})",
            pool.len()
        )));
    }
    if b < MIN_REPLICATES {
        return Err(StatsError::InvalidParameter(format!("need at least {MIN_REPLICATES} replicates, got {b}")));
    }
    let pool: Vec<f64> = pool.iter().map(|v| transform.apply(*v)).collect();
    let observed: Vec<f64> = observed.iter().map(|v| transform.apply(*v)).collect();
    let whole = SampleSummary::of(&pool)?;
    let observed_t = welch_statistic(&SampleSummary::of(&observed)?, &whole)?;

    let mut null_t = Vec::with_capacity(b);
    let mut draw = vec![0.0; n];
    for i in 0..b {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut attempts = 0;
        let summary = loop {
            for (slot, idx) in draw.iter_mut().zip(index::sample(&mut rng, pool.len(), n)) {
                *slot = pool[idx];
            }
            let s = SampleSummary::of(&draw)?;
            if s.sd > 0.0 {
                break s;
            }
            attempts += 1;
            if attempts >= MAX_REDRAWS {
                return Err(StatsError::DegenerateBootstrap { attempts });
            }
        };
        null_t.push(welch_statistic(&summary, &whole)?);
    }
    let mut sorted = null_t.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BootstrapResult {
        b,
        percentile_of_observed: percentile_of(&sorted, observed_t),
        null_t,
        observed_t,
        transform,
        seed,
    })
}
