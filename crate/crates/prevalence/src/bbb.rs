//! Bucketed Beta-Binomial estimator.
//!
//! Each bucket's prevalence p_k gets an independent Beta(a, b) prior and a
//! binomial likelihood from the labeled counts, so the posterior is
//! Beta(a + n_k^+, b + n_k^-) in closed form. Population prevalence is the
//! weighted sum π = Σ w_k p_k of independent bucket posteriors, giving
//!
//!   E[π]   = Σ w_k E[p_k]
//!   Var[π] = Σ w_k² Var[p_k]
//!
//! and a normal-approximation upper bound from those moments. The default
//! prior splits one total pseudo-count pair across the K buckets (a = b =
//! 1/K), so the prior stays equally informative regardless of resolution.
//! The whole estimator is cheap enough to run as a database aggregation.

use crate::bucket::{bucketize, BucketConfig, BucketSummary, LabeledSample, ScoredPopulation};
use crate::error::{Error, Result};
use crate::interval::{interval_from_moments, IntervalEstimate, Method, PrevalencePosterior};
use serde::{Deserialize, Serialize};

/// Bucket count and Beta prior pseudo-counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BbbConfig {
    pub k: usize,
    pub a: f64,
    pub b: f64,
}

impl Default for BbbConfig {
    /// K = 5 with a = b = 1/K; anything in K = 5..10 behaves similarly.
    fn default() -> Self {
        BbbConfig::with_k(5)
    }
}

impl BbbConfig {
    /// Config with `k` buckets and the pseudo-count-preserving prior a = b = 1/k.
    pub fn with_k(k: usize) -> Self {
        BbbConfig { k, a: 1.0 / k as f64, b: 1.0 / k as f64 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("bucket count K must be at least 1".into()));
        }
        if !(self.a > 0.0) || !(self.b > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "Beta prior pseudo-counts must be positive (a={}, b={})",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

/// Per-bucket conjugate Beta posteriors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BetaPosterior {
    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    /// Posterior mean of bucket `k`.
    pub fn mean(&self, k: usize) -> f64 {
        self.alpha[k] / (self.alpha[k] + self.beta[k])
    }

    /// Posterior variance of bucket `k`.
    pub fn variance(&self, k: usize) -> f64 {
        beta_variance(self.alpha[k], self.beta[k])
    }
}

fn beta_variance(alpha: f64, beta: f64) -> f64 {
    let s = alpha + beta;
    alpha * beta / (s * s * (s + 1.0))
}

/// Conjugate update: Beta(a + n_k^+, b + n_k^-) per bucket.
pub fn posterior(summary: &BucketSummary, config: &BbbConfig) -> Result<BetaPosterior> {
    config.validate()?;
    if summary.k() != config.k {
        return Err(Error::BucketMismatch { data: summary.k(), config: config.k });
    }
    let alpha = summary.pos().iter().map(|&n| config.a + n as f64).collect();
    let beta = summary.neg().iter().map(|&n| config.b + n as f64).collect();
    Ok(BetaPosterior { alpha, beta })
}

/// Closed-form moments of π = Σ w_k p_k over independent bucket posteriors.
pub fn prevalence(posterior: &BetaPosterior, summary: &BucketSummary) -> Result<PrevalencePosterior> {
    if posterior.k() != summary.k() {
        return Err(Error::BucketMismatch { data: summary.k(), config: posterior.k() });
    }
    let mut mean = 0.0;
    let mut variance = 0.0;
    for (k, &w) in summary.weights().iter().enumerate() {
        mean += w * posterior.mean(k);
        variance += w * w * posterior.variance(k);
    }
    PrevalencePosterior::from_moments(Method::Bbb, mean, variance)
}

/// Full pipeline: bucketize, conjugate update, normal-approximation interval.
pub fn estimate(
    population: &ScoredPopulation,
    sample: &LabeledSample,
    config: &BbbConfig,
) -> Result<IntervalEstimate> {
    let (_, _, interval) = estimate_detailed(population, sample, config)?;
    Ok(interval)
}

/// As [`estimate`], also returning the per-bucket posterior and π posterior.
pub fn estimate_detailed(
    population: &ScoredPopulation,
    sample: &LabeledSample,
    config: &BbbConfig,
) -> Result<(BetaPosterior, PrevalencePosterior, IntervalEstimate)> {
    config.validate()?;
    let summary = bucketize(population, sample, &BucketConfig::new(config.k)?)?;
    let post = posterior(&summary, config)?;
    let prev = prevalence(&post, &summary)?;
    let interval = interval_from_moments(prev.mean, prev.variance)?;
    Ok((post, prev, interval))
}

/// One day's bucket summary plus its share of the total population.
///
/// `share` is the fraction of all population scores that belong to this day,
/// so the weight of cell (bucket j, day i) is `summary.weights()[j] * share`.
#[derive(Debug, Clone)]
pub struct DaySummary {
    pub summary: BucketSummary,
    pub share: f64,
}

/// Fine time-partitioned variant: one Beta cell per (bucket, day).
///
/// The prior pseudo-counts are split evenly over all K·D cells (a_ji =
/// n_ji^+ + a/D with the default a = 1/K giving 1/(K·D)), so merging the
/// partitions back reproduces the pooled estimator's total pseudo-counts.
/// Mean and variance combine cells exactly like buckets:
/// mean = Σ mean_ji w_ji, variance = Σ Var_ji w_ji².
pub fn time_partitioned(days: &[DaySummary], config: &BbbConfig) -> Result<PrevalencePosterior> {
    config.validate()?;
    if days.is_empty() {
        return Err(Error::InvalidInput("time partition has no days".into()));
    }
    let d = days.len() as f64;
    let share_total: f64 = days.iter().map(|day| day.share).sum();
    if (share_total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "day shares sum to {share_total}, expected 1"
        )));
    }
    let a_cell = config.a / d;
    let b_cell = config.b / d;
    let mut mean = 0.0;
    let mut variance = 0.0;
    for day in days {
        if day.summary.k() != config.k {
            return Err(Error::BucketMismatch { data: day.summary.k(), config: config.k });
        }
        if !(day.share > 0.0) {
            return Err(Error::InvalidInput(format!("day share {} must be positive", day.share)));
        }
        for j in 0..config.k {
            let alpha = a_cell + day.summary.pos()[j] as f64;
            let beta = b_cell + day.summary.neg()[j] as f64;
            let w = day.summary.weights()[j] * day.share;
            mean += w * alpha / (alpha + beta);
            variance += w * w * beta_variance(alpha, beta);
        }
    }
    PrevalencePosterior::from_moments(Method::Bbb, mean, variance)
}

/// Pools per-day summaries into one coarse summary with matching weights.
///
/// Pooled bucket weight is the share-weighted day weight; pooled counts are
/// plain sums. Running [`prevalence`] on the result is the coarse variant of
/// [`time_partitioned`].
pub fn merge_days(days: &[DaySummary]) -> Result<BucketSummary> {
    if days.is_empty() {
        return Err(Error::InvalidInput("time partition has no days".into()));
    }
    let k = days[0].summary.k();
    let mut weights = vec![0.0; k];
    let mut pos = vec![0u64; k];
    let mut neg = vec![0u64; k];
    for day in days {
        if day.summary.k() != k {
            return Err(Error::BucketMismatch { data: day.summary.k(), config: k });
        }
        for j in 0..k {
            weights[j] += day.summary.weights()[j] * day.share;
            pos[j] += day.summary.pos()[j];
            neg[j] += day.summary.neg()[j];
        }
    }
    BucketSummary::new(weights, pos, neg)
}
