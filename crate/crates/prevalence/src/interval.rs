//! Interval summaries of a prevalence posterior.
//!
//! The reported quantity is a 95% equal-tailed interval whose upper endpoint
//! doubles as the one-sided 97.5% upper bound. Closed-form posteriors use a
//! normal approximation around (mean, variance); sample-based posteriors use
//! empirical percentiles.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Two-sided 97.5% z value, pinned so outputs are bit-reproducible.
pub const Z_975: f64 = 1.959964;

/// Estimation method that produced a posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bbb,
    Gp,
    Bootstrap,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bbb" => Ok(Method::Bbb),
            "gp" => Ok(Method::Gp),
            "bootstrap" => Ok(Method::Bootstrap),
            other => Err(Error::InvalidInput(format!(
                "unknown method {other:?} (expected bbb, gp, or bootstrap)"
            ))),
        }
    }
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Bbb => "bbb",
            Method::Gp => "gp",
            Method::Bootstrap => "bootstrap",
        }
    }
}

/// Posterior over the prevalence π, tagged by method.
///
/// Closed-form methods carry only moments; sampling methods also carry the
/// pooled posterior draws (and MCMC convergence diagnostics when relevant).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrevalencePosterior {
    pub method: Method,
    pub mean: f64,
    pub variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    /// Split-R̂ of the pooled π draws; `None` for non-MCMC methods.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhat: Option<f64>,
    /// False when the sampler's R̂ exceeded the warning threshold.
    pub converged: bool,
}

impl PrevalencePosterior {
    pub fn from_moments(method: Method, mean: f64, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(Error::NegativeVariance(variance));
        }
        Ok(PrevalencePosterior { method, mean, variance, samples: None, rhat: None, converged: true })
    }

    pub fn from_samples(method: Method, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples);
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let variance = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(PrevalencePosterior { method, mean, variance, samples: Some(samples), rhat: None, converged: true })
    }

    /// Interval matching the posterior's representation: empirical percentiles
    /// when draws are present, normal approximation otherwise.
    pub fn interval(&self) -> Result<IntervalEstimate> {
        match &self.samples {
            Some(samples) => interval_from_samples(samples),
            None => interval_from_moments(self.mean, self.variance),
        }
    }
}

/// Point estimate with 95% interval; `upper` is the reported upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Normal-approximation interval around (mean, variance), clamped to [0, 1].
pub fn interval_from_moments(mean: f64, variance: f64) -> Result<IntervalEstimate> {
    if !(variance >= 0.0) {
        return Err(Error::NegativeVariance(variance));
    }
    let sd = variance.sqrt();
    Ok(IntervalEstimate {
        point: mean,
        lower: (mean - Z_975 * sd).clamp(0.0, 1.0),
        upper: (mean + Z_975 * sd).clamp(0.0, 1.0),
    })
}

/// Empirical 2.5/97.5 percentile interval over posterior draws in [0, 1].
pub fn interval_from_samples(samples: &[f64]) -> Result<IntervalEstimate> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples);
    }
    for &s in samples {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidInput(format!("posterior sample {s} outside [0, 1]")));
        }
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let point = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(IntervalEstimate {
        point,
        lower: percentile(&sorted, 0.025),
        upper: percentile(&sorted, 0.975),
    })
}

/// Percentile with linear interpolation between order statistics, using the
/// exclusive plotting position h = p(n+1) - 1. This variant keeps at least
/// a (upper - lower) fraction of the input inside the interval, so the 95%
/// interval brackets at least 95% of the draws.
pub(crate) fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = p * (n as f64 + 1.0) - 1.0;
    if h <= 0.0 {
        return sorted[0];
    }
    if h >= (n - 1) as f64 {
        return sorted[n - 1];
    }
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}
