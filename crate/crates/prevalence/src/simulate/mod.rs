//! Synthetic populations and the coverage experiment harness.
//!
//! A population is M scores drawn from a truncated exponential on [0, 1]
//! (rate λ: most content scores low) plus a calibration curve giving each
//! item's true violation probability. Ground truth is the exact mean of
//! that probability over the generated scores, so estimator coverage can be
//! judged against a known π. Sampling mimics a deployed review pipeline:
//! inclusion probability tilted toward high scores (∝ e^{βs}), systematic
//! probability-proportional-to-size selection, Hájek-style weights, and
//! Bernoulli labels from the curve.

mod curve;
mod experiment;

pub use curve::CalibrationCurve;
pub use experiment::{
    run_experiment, ExperimentReport, ExperimentSpec, MethodSummary, TrialMetrics, TrialRecord,
};

use crate::bucket::{LabeledEntry, LabeledSample, ScoredPopulation};
use crate::error::{Error, Result};
use crate::seed::{rng_for, DEFAULT_SEED};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Recipe for a synthetic scored population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    /// Population size M.
    pub m: usize,
    /// Rate of the truncated exponential score distribution (density ∝ e^{-λs}).
    pub lambda: f64,
    pub curve: CalibrationCurve,
    /// When set, the curve is rescaled by a bisection-solved constant so the
    /// realized ground truth hits this value.
    #[serde(default)]
    pub target_prevalence: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::EmptyPopulation);
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if let Some(t) = self.target_prevalence {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "target prevalence {t} outside (0, 1)"
                )));
            }
        }
        self.curve.validate()
    }
}

/// How labeling candidates are picked from the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingStrategy {
    /// Score tilt: inclusion probability ∝ e^{βs}. β = 0 is simple random
    /// sampling; the default oversamples the rare high-score region.
    pub beta: f64,
}

impl Default for SamplingStrategy {
    fn default() -> Self {
        SamplingStrategy { beta: 3.0 }
    }
}

impl SamplingStrategy {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "beta must be non-negative and finite, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Generated scores plus the (possibly rescaled) label-probability curve.
#[derive(Debug, Clone)]
pub struct SyntheticPopulation {
    scores: Vec<f64>,
    curve: CalibrationCurve,
    /// Multiplier applied to the curve before clipping; 1 unless the spec
    /// asked for a target prevalence.
    curve_scale: f64,
    ground_truth: f64,
}

impl SyntheticPopulation {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn size(&self) -> usize {
        self.scores.len()
    }

    /// Exact prevalence (1/M) Σ f(x_i) over the generated scores.
    pub fn ground_truth(&self) -> f64 {
        self.ground_truth
    }

    pub fn curve_scale(&self) -> f64 {
        self.curve_scale
    }

    /// True violation probability of an item with score `s`.
    pub fn label_probability(&self, s: f64) -> f64 {
        (self.curve_scale * self.curve.evaluate(s)).clamp(0.0, 1.0)
    }

    /// The scores as estimator input.
    pub fn to_scored(&self) -> ScoredPopulation {
        ScoredPopulation::from_scores(self.scores.clone())
            .expect("generated scores are always valid")
    }

    /// Population bucket counts at resolution `k` (estimator input that
    /// avoids re-scanning all M scores per trial).
    pub fn histogram(&self, k: usize) -> Result<ScoredPopulation> {
        if k == 0 {
            return Err(Error::InvalidConfig("bucket count K must be at least 1".into()));
        }
        let mut counts = vec![0u64; k];
        for &s in &self.scores {
            counts[((s * k as f64) as usize).min(k - 1)] += 1;
        }
        ScoredPopulation::from_histogram(counts)
    }
}

/// Inverse-CDF draw from the truncated exponential on [0, 1]:
/// s = -ln(1 - u(1 - e^{-λ})) / λ, stable down to tiny λ.
fn truncated_exponential(u: f64, lambda: f64) -> f64 {
    (-libm::log1p(u * libm::expm1(-lambda)) / lambda).clamp(0.0, 1.0)
}

/// Generates the population and computes its exact ground truth. When the
/// spec sets `target_prevalence`, the curve is scaled by a constant solved
/// by bisection so the realized ground truth matches the target.
pub fn generate_population(spec: &PopulationSpec) -> Result<SyntheticPopulation> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, 0);
    let scores: Vec<f64> = (0..spec.m)
        .map(|_| truncated_exponential(rng.random::<f64>(), spec.lambda))
        .collect();

    let mean_scaled = |scale: f64| -> f64 {
        scores
            .iter()
            .map(|&s| (scale * spec.curve.evaluate(s)).clamp(0.0, 1.0))
            .sum::<f64>()
            / spec.m as f64
    };

    let curve_scale = match spec.target_prevalence {
        None => 1.0,
        Some(target) => {
            // π(scale) is non-decreasing; bracket the target, then bisect.
            let mut hi = 1.0;
            while mean_scaled(hi) < target {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(Error::InvalidConfig(format!(
                        "curve cannot reach target prevalence {target}"
                    )));
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mean_scaled(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            hi
        }
    };

    let ground_truth = mean_scaled(curve_scale);
    Ok(SyntheticPopulation { scores, curve: spec.curve.clone(), curve_scale, ground_truth })
}

/// Capped inclusion probabilities p_i ∝ e^{βs_i} with Σ p_i = n, p_i ≤ 1.
///
/// Tilts are normalized to total n first; items pushed past 1 are then
/// pinned there and their excess redistributed over the rest. Each pass pins
/// a non-empty set or terminates, and at most n items can ever be pinned,
/// so the loop is short in practice (one pass when nothing caps).
fn inclusion_probabilities(scores: &[f64], beta: f64, n: usize) -> Vec<f64> {
    let mut p: Vec<f64> = scores.iter().map(|&s| (beta * s).exp()).collect();
    let total: f64 = p.iter().sum();
    let scale = n as f64 / total;
    for x in p.iter_mut() {
        *x *= scale;
    }
    loop {
        let pinned = p.iter().filter(|&&x| x >= 1.0).count();
        let free_total: f64 = p.iter().filter(|&&x| x < 1.0).sum();
        let need = n as f64 - pinned as f64;
        if need <= 0.0 || free_total <= 0.0 {
            break;
        }
        let c = need / free_total;
        let mut newly_pinned = false;
        for x in p.iter_mut() {
            if *x < 1.0 {
                *x *= c;
                if *x >= 1.0 {
                    newly_pinned = true;
                }
            }
        }
        if !newly_pinned {
            break;
        }
    }
    for x in p.iter_mut() {
        *x = x.min(1.0);
    }
    p
}

/// Systematic PPS selection: walk the cumulative probabilities with ticks at
/// u, u+1, …, u+n-1. With Σ probs = n and every p_i ≤ 1, each tick lands on
/// a distinct item, so this returns exactly n strictly increasing indices.
fn select_systematic(probs: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // The top of the start range is shaved off so that accumulated rounding
    // in the cumulative sum (≪ 1e-4 even for huge populations) can never
    // leave the final ticks past the total mass.
    let start: f64 = rng.random::<f64>().min(1.0 - 1e-4);
    let mut selected: Vec<usize> = Vec::with_capacity(n);
    let mut cum = 0.0;
    let mut item = 0usize;
    for tick in 0..n {
        let t = start + tick as f64;
        // Advance past finished intervals; also force at least one step off
        // an item that was already selected (p_i = 1 plus rounding could
        // otherwise pick it twice).
        while item + 1 < probs.len()
            && (cum + probs[item] <= t || selected.last() == Some(&item))
        {
            cum += probs[item];
            item += 1;
        }
        selected.push(item);
    }
    selected
}

/// Draws a weighted, labeled sample of exactly `n` items without
/// replacement (systematic PPS over the tilted inclusion probabilities).
/// Weights are 1/p_i rescaled to mean 1; labels are Bernoulli(f(x_i)).
pub fn draw_sample(
    population: &SyntheticPopulation,
    strategy: &SamplingStrategy,
    n: usize,
    seed: u64,
) -> Result<LabeledSample> {
    strategy.validate()?;
    let m = population.size();
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    if n > m {
        return Err(Error::InvalidInput(format!(
            "sample size {n} exceeds population size {m}"
        )));
    }
    let probs = inclusion_probabilities(population.scores(), strategy.beta, n);
    let mut rng = rng_for(seed, 0);
    let indices = select_systematic(&probs, n, &mut rng);

    let raw_weights: Vec<f64> = indices.iter().map(|&i| 1.0 / probs[i]).collect();
    let mean_weight = raw_weights.iter().sum::<f64>() / n as f64;

    let entries = indices
        .iter()
        .zip(&raw_weights)
        .map(|(&i, &w)| {
            let s = population.scores()[i];
            let label = rng.random::<f64>() < population.label_probability(s);
            LabeledEntry::with_weight(s, label, w / mean_weight)
        })
        .collect();
    LabeledSample::new(entries)
}
