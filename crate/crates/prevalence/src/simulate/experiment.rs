//! Repeated-trial coverage experiment: generate one population, then for
//! each sample size draw many labeled samples and score every estimator on
//! the same samples (paired by a per-(N, trial) derived seed).

use super::{draw_sample, generate_population, PopulationSpec, SamplingStrategy};
use crate::bbb::{self, BbbConfig};
use crate::bootstrap::{self, BootstrapConfig};
use crate::bucket::{LabeledSample, ScoredPopulation};
use crate::error::{Error, Result};
use crate::gp::{self, GpConfig};
use crate::interval::{IntervalEstimate, Method};
use crate::seed::{substream, substream2, DEFAULT_SEED};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Substream indices under each trial's seed. Index 0 is the sample draw.
const GP_STREAM: u64 = 1;
const BOOTSTRAP_STREAM: u64 = 2;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Everything a coverage run needs; serializable as the experiment file
/// format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub population: PopulationSpec,
    #[serde(default)]
    pub strategy: SamplingStrategy,
    /// Labeled-sample sizes to sweep.
    pub n_grid: Vec<usize>,
    /// Trials per sample size.
    pub trials: usize,
    pub methods: Vec<Method>,
    /// Root seed for sampling and estimator randomness. Per-trial seeds are
    /// derived from (seed, N, trial), so every method sees identical samples
    /// and any prefix of trials is reproducible.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Estimator settings; their own `seed` fields are ignored here in
    /// favor of derived per-trial streams.
    #[serde(default)]
    pub bbb: BbbConfig,
    #[serde(default)]
    pub gp: GpConfig,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.population.validate()?;
        self.strategy.validate()?;
        self.bbb.validate()?;
        self.gp.validate()?;
        self.bootstrap.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("need at least one trial".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidConfig("n_grid is empty".into()));
        }
        for &n in &self.n_grid {
            if n == 0 || n > self.population.m {
                return Err(Error::InvalidConfig(format!(
                    "sample size {n} outside 1..={}",
                    self.population.m
                )));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::InvalidConfig(format!("duplicate method {}", m.name())));
            }
        }
        Ok(())
    }
}

/// One estimator's result on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    /// u − l.
    pub ci_size: f64,
    /// Ground truth fell outside the open interval (l, u).
    pub wrong_ci: bool,
    /// Ground truth exceeded the upper bound (the expensive failure mode).
    pub wrong_upper: bool,
    /// Sampler convergence; always true for non-MCMC methods.
    pub converged: bool,
}

impl TrialMetrics {
    fn new(interval: &IntervalEstimate, ground_truth: f64, converged: bool) -> Self {
        let wrong_upper = ground_truth > interval.upper;
        let wrong_ci =
            !(ground_truth > interval.lower && ground_truth < interval.upper);
        TrialMetrics {
            point: interval.point,
            lower: interval.lower,
            upper: interval.upper,
            ci_size: interval.upper - interval.lower,
            wrong_ci,
            wrong_upper,
            converged,
        }
    }
}

/// Long-format row: one (method, N, trial) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub n: usize,
    pub trial: usize,
    /// `None` when the estimator failed on this trial.
    pub metrics: Option<TrialMetrics>,
    pub error: Option<String>,
}

/// Per-(method, N) averages over the successful trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub n: usize,
    /// Trials attempted (the spec's `trials`); failures are excluded from
    /// the averages and counted separately.
    pub trials: usize,
    pub avg_ci_size: f64,
    pub wrong_ci_rate: f64,
    pub wrong_upper_rate: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Exact prevalence of the generated population.
    pub ground_truth: f64,
    /// Curve multiplier resolved by the target-prevalence bisection.
    pub curve_scale: f64,
    pub summaries: Vec<MethodSummary>,
    pub records: Vec<TrialRecord>,
}

fn run_method(
    method: Method,
    bbb_population: &ScoredPopulation,
    gp_population: &ScoredPopulation,
    sample: &LabeledSample,
    spec: &ExperimentSpec,
    trial_seed: u64,
) -> Result<(IntervalEstimate, bool)> {
    match method {
        Method::Bbb => {
            let interval = bbb::estimate(bbb_population, sample, &spec.bbb)?;
            Ok((interval, true))
        }
        Method::Gp => {
            let config = GpConfig { seed: substream(trial_seed, GP_STREAM), ..spec.gp };
            let (posterior, interval) = gp::estimate_detailed(gp_population, sample, &config)?;
            Ok((interval, posterior.prevalence.converged))
        }
        Method::Bootstrap => {
            let config = BootstrapConfig {
                seed: substream(trial_seed, BOOTSTRAP_STREAM),
                ..spec.bootstrap
            };
            let interval = bootstrap::estimate(sample, &config)?;
            Ok((interval, true))
        }
    }
}

/// Runs the full grid. Trials are parallel; every output is a deterministic
/// function of the spec, independent of thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let population = generate_population(&spec.population)?;
    let ground_truth = population.ground_truth();
    let bbb_population = population.histogram(spec.bbb.k)?;
    let gp_population = population.histogram(spec.gp.k)?;

    let mut records = Vec::with_capacity(spec.n_grid.len() * spec.trials * spec.methods.len());
    for &n in &spec.n_grid {
        let mut per_n: Vec<Vec<TrialRecord>> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| {
                let trial_seed = substream2(spec.seed, n as u64, trial as u64);
                let sample = draw_sample(&population, &spec.strategy, n, trial_seed)
                    .expect("sizes validated against the population");
                spec.methods
                    .iter()
                    .map(|&method| {
                        match run_method(
                            method,
                            &bbb_population,
                            &gp_population,
                            &sample,
                            spec,
                            trial_seed,
                        ) {
                            Ok((interval, converged)) => TrialRecord {
                                method,
                                n,
                                trial,
                                metrics: Some(TrialMetrics::new(
                                    &interval,
                                    ground_truth,
                                    converged,
                                )),
                                error: None,
                            },
                            Err(e) => TrialRecord {
                                method,
                                n,
                                trial,
                                metrics: None,
                                error: Some(e.to_string()),
                            },
                        }
                    })
                    .collect()
            })
            .collect();
        records.extend(per_n.drain(..).flatten());
    }

    let summaries = summarize(&records, spec);
    Ok(ExperimentReport {
        ground_truth,
        curve_scale: population.curve_scale(),
        summaries,
        records,
    })
}

fn summarize(records: &[TrialRecord], spec: &ExperimentSpec) -> Vec<MethodSummary> {
    let mut summaries = Vec::with_capacity(spec.n_grid.len() * spec.methods.len());
    for &n in &spec.n_grid {
        for &method in &spec.methods {
            let cell = records.iter().filter(|r| r.n == n && r.method == method);
            let mut successes = 0usize;
            let mut failures = 0usize;
            let (mut ci_sum, mut wrong_ci, mut wrong_upper) = (0.0, 0usize, 0usize);
            for record in cell {
                match &record.metrics {
                    Some(m) => {
                        successes += 1;
                        ci_sum += m.ci_size;
                        wrong_ci += m.wrong_ci as usize;
                        wrong_upper += m.wrong_upper as usize;
                    }
                    None => failures += 1,
                }
            }
            let denom = successes.max(1) as f64;
            summaries.push(MethodSummary {
                method,
                n,
                trials: spec.trials,
                avg_ci_size: ci_sum / denom,
                wrong_ci_rate: wrong_ci as f64 / denom,
                wrong_upper_rate: wrong_upper as f64 / denom,
                failures,
            });
        }
    }
    summaries
}
