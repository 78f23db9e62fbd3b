//! Percentile bootstrap over the labeled sample — the baseline the Bayesian
//! estimators are judged against.
//!
//! Each resample draws n entries with replacement and computes the Hájek
//! (self-normalized) weighted mean Σ w_i y_i / Σ w_i; the interval comes
//! from the 2.5th/97.5th percentiles of the resample means. The method's
//! known failure mode is kept on purpose: a sample with zero positives
//! yields an upper bound of exactly 0, however small the sample.

use crate::bucket::LabeledSample;
use crate::error::{Error, Result};
use crate::interval::{IntervalEstimate, Method, PrevalencePosterior};
use crate::seed::{rng_for, DEFAULT_SEED};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub resamples: usize,
    /// Root seed; resample b uses the derived substream `(seed, b)`.
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { resamples: 1000, seed: DEFAULT_SEED }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 resamples, got {}",
                self.resamples
            )));
        }
        Ok(())
    }
}

/// Percentile-bootstrap interval for the weighted sample prevalence.
pub fn estimate(sample: &LabeledSample, config: &BootstrapConfig) -> Result<IntervalEstimate> {
    let (_, interval) = estimate_detailed(sample, config)?;
    Ok(interval)
}

/// As [`estimate`], also returning the resample means as a posterior-like
/// sample set (for dumps and diagnostics).
pub fn estimate_detailed(
    sample: &LabeledSample,
    config: &BootstrapConfig,
) -> Result<(PrevalencePosterior, IntervalEstimate)> {
    config.validate()?;
    let entries = sample.entries();
    let n = entries.len();
    let weights: Vec<f64> = entries.iter().map(|e| e.weight).collect();
    let weighted_labels: Vec<f64> =
        entries.iter().map(|e| if e.label { e.weight } else { 0.0 }).collect();

    let means: Vec<f64> = (0..config.resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(config.seed, b as u64);
            let mut numerator = 0.0;
            let mut denominator = 0.0;
            for _ in 0..n {
                let i = rng.random_range(0..n);
                numerator += weighted_labels[i];
                denominator += weights[i];
            }
            numerator / denominator
        })
        .collect();

    let posterior = PrevalencePosterior::from_samples(Method::Bootstrap, means)?;
    let interval = posterior.interval()?;
    Ok((posterior, interval))
}
