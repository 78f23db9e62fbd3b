//! Score bucketing: the shared front end of every estimator.
//!
//! A population of classifier scores on [0, 1] is split into `K` equal-width
//! buckets. Bucket weights come from the full population; labeled counts come
//! from the (much smaller) labeled sample. Everything downstream consumes the
//! resulting [`BucketSummary`], so a population may equally be supplied as a
//! pre-computed histogram instead of raw scores.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Full corpus of classifier scores, either raw or pre-bucketed.
#[derive(Debug, Clone)]
pub enum ScoredPopulation {
    /// Raw scores, each in [0, 1].
    Scores(Vec<f64>),
    /// Per-bucket score counts for a fixed equal-width partition of [0, 1].
    Histogram(Vec<u64>),
}

impl ScoredPopulation {
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        for &s in &scores {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::ScoreOutOfRange(s));
            }
        }
        Ok(ScoredPopulation::Scores(scores))
    }

    pub fn from_histogram(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() || counts.iter().sum::<u64>() == 0 {
            return Err(Error::EmptyPopulation);
        }
        Ok(ScoredPopulation::Histogram(counts))
    }

    /// Population size M.
    pub fn size(&self) -> u64 {
        match self {
            ScoredPopulation::Scores(s) => s.len() as u64,
            ScoredPopulation::Histogram(c) => c.iter().sum(),
        }
    }
}

/// One labeled item: score, binary label, inclusion weight, optional day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledEntry {
    pub score: f64,
    pub label: bool,
    pub weight: f64,
    pub day: Option<u32>,
}

impl LabeledEntry {
    pub fn new(score: f64, label: bool) -> Self {
        LabeledEntry { score, label, weight: 1.0, day: None }
    }

    pub fn with_weight(score: f64, label: bool, weight: f64) -> Self {
        LabeledEntry { score, label, weight, day: None }
    }
}

/// The N labeled items used for inference.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    entries: Vec<LabeledEntry>,
}

impl LabeledSample {
    pub fn new(entries: Vec<LabeledEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptySample);
        }
        for e in &entries {
            if !(0.0..=1.0).contains(&e.score) {
                return Err(Error::ScoreOutOfRange(e.score));
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(Error::NonPositiveWeight(e.weight));
            }
        }
        Ok(LabeledSample { entries })
    }

    pub fn entries(&self) -> &[LabeledEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.entries.iter().filter(|e| e.label).count()
    }
}

/// Equal-width partition of [0, 1] into K buckets.
///
/// Bucket `k` (0-based) covers `[k/K, (k+1)/K)`; the final bucket is closed
/// at 1.0 so that a score of exactly 1.0 is not orphaned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketConfig {
    pub k: usize,
}

impl BucketConfig {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("bucket count K must be at least 1".into()));
        }
        Ok(BucketConfig { k })
    }

    /// Bucket index of a score in [0, 1].
    pub fn index_of(&self, score: f64) -> usize {
        ((score * self.k as f64) as usize).min(self.k - 1)
    }
}

/// Per-bucket statistics consumed by every estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    /// Fraction of the full population landing in each bucket; sums to 1.
    weights: Vec<f64>,
    /// Positive labeled counts per bucket.
    pos: Vec<u64>,
    /// Negative labeled counts per bucket.
    neg: Vec<u64>,
}

impl BucketSummary {
    /// Builds a summary from per-bucket weights and label counts.
    pub fn new(weights: Vec<f64>, pos: Vec<u64>, neg: Vec<u64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("bucket summary has zero buckets".into()));
        }
        if weights.len() != pos.len() || weights.len() != neg.len() {
            return Err(Error::BucketMismatch { data: pos.len(), config: weights.len() });
        }
        if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(Error::InvalidInput("bucket weights must lie in [0, 1]".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "bucket weights sum to {total}, expected 1"
            )));
        }
        Ok(BucketSummary { weights, pos, neg })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pos(&self) -> &[u64] {
        &self.pos
    }

    pub fn neg(&self) -> &[u64] {
        &self.neg
    }

    /// Total labeled count in bucket `k`.
    pub fn n(&self, k: usize) -> u64 {
        self.pos[k] + self.neg[k]
    }

    /// Summary with the same buckets and no labeled data at all.
    pub fn without_labels(&self) -> BucketSummary {
        BucketSummary {
            weights: self.weights.clone(),
            pos: vec![0; self.k()],
            neg: vec![0; self.k()],
        }
    }

    /// Uniformly weighted summary with no labeled data (prior studies).
    pub fn empty_uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("bucket count K must be at least 1".into()));
        }
        Ok(BucketSummary {
            weights: vec![1.0 / k as f64; k],
            pos: vec![0; k],
            neg: vec![0; k],
        })
    }
}

/// Splits population and sample into per-bucket weights and label counts.
///
/// Weights are computed from the FULL population; labeled counts only from
/// the sample. A histogram population must match `config.k`.
pub fn bucketize(
    population: &ScoredPopulation,
    sample: &LabeledSample,
    config: &BucketConfig,
) -> Result<BucketSummary> {
    let k = config.k;
    let weights = population_weights(population, config)?;

    let mut pos = vec![0u64; k];
    let mut neg = vec![0u64; k];
    for e in sample.entries() {
        let idx = config.index_of(e.score);
        if e.label {
            pos[idx] += 1;
        } else {
            neg[idx] += 1;
        }
    }
    BucketSummary::new(weights, pos, neg)
}

/// Bucket weights w_k = |I_k| / M for the full population.
pub fn population_weights(
    population: &ScoredPopulation,
    config: &BucketConfig,
) -> Result<Vec<f64>> {
    let k = config.k;
    let m = population.size();
    if m == 0 {
        return Err(Error::EmptyPopulation);
    }
    let counts: Vec<u64> = match population {
        ScoredPopulation::Scores(scores) => {
            let mut counts = vec![0u64; k];
            for &s in scores {
                counts[config.index_of(s)] += 1;
            }
            counts
        }
        ScoredPopulation::Histogram(c) => {
            if c.len() != k {
                return Err(Error::BucketMismatch { data: c.len(), config: k });
            }
            c.clone()
        }
    };
    Ok(counts.iter().map(|&c| c as f64 / m as f64).collect())
}
