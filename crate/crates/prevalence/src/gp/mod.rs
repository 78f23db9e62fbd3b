//! Bucketed Gaussian-process estimator.
//!
//! The per-bucket prevalences share a latent smooth curve: a global level
//! μ ~ N(0,1) plus a zero-mean GP over bucket midpoints, mapped through the
//! probit link,
//!
//!   q ~ N(μ·1, Σ),   Σ_ij = α² exp(-d_ij / (2ρ²)),   d_ij = ((i-j)/K)²,
//!   p_k = Φ(q_k),    π = Σ w_k p_k.
//!
//! With many buckets, most hold no labeled examples; the covariance shares
//! strength between neighbours so the posterior interpolates instead of
//! falling back to a flat prior bucket by bucket. The posterior has no
//! closed form and is sampled by MCMC (see [`sampler`]); the upper bound is
//! the 97.5th percentile of the pooled π draws.
//!
//! Hyperparameter defaults (K = 100, ρ = 0.1, α = 1) are chosen so that the
//! implied prior on π is close to uniform on [0, 1] — see
//! [`ks_uniform_statistic`] and the `prior-check` CLI subcommand, which
//! reproduce that calibration argument.

pub mod probit;
mod sampler;

use crate::bucket::{bucketize, BucketConfig, BucketSummary, LabeledSample, ScoredPopulation};
use crate::error::{Error, Result};
use crate::interval::{percentile, IntervalEstimate, Method, PrevalencePosterior};
use crate::seed::DEFAULT_SEED;
use nalgebra::{DMatrix, DVector};
use probit::log_std_normal_cdf;
use serde::{Deserialize, Serialize};

/// Convergence threshold on split-R̂ of the pooled π draws.
pub const RHAT_THRESHOLD: f64 = 1.05;

/// Bucket resolution, covariance hyperparameters, and sampler schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    /// Number of equal-width score buckets.
    pub k: usize,
    /// Correlation length of the latent curve, in score units.
    pub rho: f64,
    /// Marginal standard deviation of the latent curve around μ.
    pub alpha: f64,
    /// Absolute diagonal jitter added to the covariance.
    pub jitter: f64,
    /// Independent MCMC chains; draws are pooled in chain order.
    pub chains: usize,
    /// Discarded iterations per chain.
    pub warmup: usize,
    /// Retained iterations per chain.
    pub kept: usize,
    /// Root seed; chain c uses the derived substream `(seed, c)`.
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            k: 100,
            rho: 0.1,
            alpha: 1.0,
            jitter: 1e-9,
            chains: 4,
            warmup: 1000,
            kept: 1000,
            seed: DEFAULT_SEED,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("bucket count K must be at least 1".into()));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidConfig(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        if !(self.jitter > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "jitter must be positive, got {}",
                self.jitter
            )));
        }
        if self.chains == 0 {
            return Err(Error::InvalidConfig("need at least one chain".into()));
        }
        if self.kept < 2 {
            return Err(Error::InvalidConfig("need at least two kept draws per chain".into()));
        }
        Ok(())
    }

    /// Non-fatal configuration smells.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let width = 1.0 / self.k as f64;
        if width > self.rho / 2.0 {
            out.push(format!(
                "bucket width 1/K = {width:.4} exceeds half the correlation length \
                 (rho/2 = {:.4}); neighbouring buckets are nearly independent and the \
                 smoothing prior has little effect",
                self.rho / 2.0
            ));
        }
        out
    }

    /// Σ with entries α² exp(-((i-j)/K)² / (2ρ²)) and `jitter` on the diagonal.
    pub fn covariance(&self) -> DMatrix<f64> {
        let k = self.k;
        let a2 = self.alpha * self.alpha;
        let denom = 2.0 * self.rho * self.rho;
        DMatrix::from_fn(k, k, |i, j| {
            let d = (i as f64 - j as f64) / k as f64;
            let cov = a2 * (-(d * d) / denom).exp();
            if i == j {
                cov + self.jitter
            } else {
                cov
            }
        })
    }
}

/// Precomputed quantities the sampler reuses every iteration.
pub(crate) struct GpModel {
    weights: Vec<f64>,
    pos: Vec<f64>,
    neg: Vec<f64>,
    /// Lower Cholesky factor of Σ.
    chol_l: DMatrix<f64>,
    /// Σ⁻¹·1, for the conjugate-form conditional of μ.
    sigma_inv_one: DVector<f64>,
    /// 1ᵀΣ⁻¹1.
    one_sigma_inv_one: f64,
    /// ln|Σ|; only the test-only joint-density cross-check reads it.
    #[cfg_attr(not(test), allow(dead_code))]
    log_det: f64,
}

impl GpModel {
    pub(crate) fn new(summary: &BucketSummary, config: &GpConfig) -> Result<GpModel> {
        config.validate()?;
        if summary.k() != config.k {
            return Err(Error::BucketMismatch { data: summary.k(), config: config.k });
        }
        let sigma = config.covariance();
        let chol = sigma.cholesky().ok_or_else(|| {
            Error::InvalidConfig(
                "covariance is not positive definite; increase the jitter".into(),
            )
        })?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let ones = DVector::from_element(config.k, 1.0);
        let sigma_inv_one = chol.solve(&ones);
        let one_sigma_inv_one = ones.dot(&sigma_inv_one);
        Ok(GpModel {
            weights: summary.weights().to_vec(),
            pos: summary.pos().iter().map(|&n| n as f64).collect(),
            neg: summary.neg().iter().map(|&n| n as f64).collect(),
            chol_l: chol.unpack(),
            sigma_inv_one,
            one_sigma_inv_one,
            log_det,
        })
    }

    pub(crate) fn k(&self) -> usize {
        self.weights.len()
    }

    /// Binomial log-likelihood Σ_k n_k⁺ ln Φ(q_k) + n_k⁻ ln Φ(-q_k),
    /// up to the count-only combinatorial constant.
    pub(crate) fn log_likelihood(&self, q: &DVector<f64>) -> f64 {
        let mut ll = 0.0;
        for k in 0..self.k() {
            if self.pos[k] > 0.0 {
                ll += self.pos[k] * log_std_normal_cdf(q[k]);
            }
            if self.neg[k] > 0.0 {
                ll += self.neg[k] * log_std_normal_cdf(-q[k]);
            }
        }
        ll
    }

    /// Conditional of μ given q is N(m̂, 1/prec) with prec = 1 + 1ᵀΣ⁻¹1 and
    /// m̂ = (Σ⁻¹1)ᵀq / prec (standard-normal prior plus Gaussian likelihood).
    pub(crate) fn mu_conditional(&self, q: &DVector<f64>) -> (f64, f64) {
        let prec = 1.0 + self.one_sigma_inv_one;
        let m_hat = self.sigma_inv_one.dot(q) / prec;
        (m_hat, prec)
    }

    /// ν = L·z for z ~ N(0, I), i.e. ν ~ N(0, Σ).
    pub(crate) fn correlate(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.chol_l * z
    }

    pub(crate) fn prevalence_from_p(&self, p: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(p)
            .map(|(w, pk)| w * pk)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Full joint log density ln N(μ;0,1) + ln N(q;μ1,Σ) + log-likelihood.
    /// Slower than the cached conditionals; used to cross-check them.
    #[cfg(test)]
    pub(crate) fn log_joint(&self, mu: f64, q: &DVector<f64>) -> f64 {
        use std::f64::consts::PI;
        let k = self.k() as f64;
        let centered = q - DVector::from_element(self.k(), mu);
        // Solve Σ x = centered via the cached factor: L Lᵀ x = c.
        let x = self
            .chol_l
            .solve_lower_triangular(&centered)
            .expect("factor is nonsingular");
        let quad = x.dot(&x); // cᵀ Σ⁻¹ c = ‖L⁻¹c‖²
        let log_prior_mu = -0.5 * mu * mu - 0.5 * (2.0 * PI).ln();
        let log_prior_q = -0.5 * quad - 0.5 * self.log_det - 0.5 * k * (2.0 * PI).ln();
        log_prior_mu + log_prior_q + self.log_likelihood(q)
    }
}

/// Posterior summaries from the pooled MCMC draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpPosterior {
    /// π draws with split-R̂ diagnostics; `interval()` gives the percentile
    /// point estimate and bounds.
    pub prevalence: PrevalencePosterior,
    /// Per-bucket 2.5th percentile of p_k.
    pub bucket_lower: Vec<f64>,
    /// Per-bucket posterior median of p_k.
    pub bucket_median: Vec<f64>,
    /// Per-bucket 97.5th percentile of p_k.
    pub bucket_upper: Vec<f64>,
}

/// Runs the MCMC on an already-bucketized summary.
pub fn sample_posterior(summary: &BucketSummary, config: &GpConfig) -> Result<GpPosterior> {
    let model = GpModel::new(summary, config)?;
    let chains = sampler::run_chains(&model, config);

    let per_chain_pi: Vec<&[f64]> = chains.iter().map(|c| c.pi.as_slice()).collect();
    let rhat = sampler::split_rhat(&per_chain_pi);
    let pooled_pi: Vec<f64> = chains.iter().flat_map(|c| c.pi.iter().copied()).collect();

    let mut prevalence = PrevalencePosterior::from_samples(Method::Gp, pooled_pi)?;
    prevalence.rhat = Some(rhat);
    prevalence.converged = rhat.is_finite() && rhat <= RHAT_THRESHOLD;

    let k = config.k;
    let draws = chains.iter().map(|c| c.bucket_p.len()).sum::<usize>();
    let mut bucket_lower = Vec::with_capacity(k);
    let mut bucket_median = Vec::with_capacity(k);
    let mut bucket_upper = Vec::with_capacity(k);
    let mut column = Vec::with_capacity(draws);
    for j in 0..k {
        column.clear();
        column.extend(
            chains
                .iter()
                .flat_map(|c| c.bucket_p.iter().map(move |row| row[j])),
        );
        column.sort_unstable_by(f64::total_cmp);
        bucket_lower.push(percentile(&column, 0.025));
        bucket_median.push(percentile(&column, 0.5));
        bucket_upper.push(percentile(&column, 0.975));
    }

    Ok(GpPosterior { prevalence, bucket_lower, bucket_median, bucket_upper })
}

/// Draws from the prior on π (no labeled data, uniform bucket weights).
///
/// Uses the same MCMC transition as the posterior, so the draws carry the
/// sampler's mixing profile — this is the distribution the uniformity
/// calibration of the hyperparameters actually sees.
pub fn sample_prior_prevalence(config: &GpConfig) -> Result<Vec<f64>> {
    let summary = BucketSummary::empty_uniform(config.k)?;
    let posterior = sample_posterior(&summary, config)?;
    Ok(posterior.prevalence.samples.expect("sampler always stores draws"))
}

/// Full pipeline: bucketize, run the sampler, percentile interval.
pub fn estimate(
    population: &ScoredPopulation,
    sample: &LabeledSample,
    config: &GpConfig,
) -> Result<IntervalEstimate> {
    let (_, interval) = estimate_detailed(population, sample, config)?;
    Ok(interval)
}

/// As [`estimate`], also returning the posterior draws and diagnostics.
pub fn estimate_detailed(
    population: &ScoredPopulation,
    sample: &LabeledSample,
    config: &GpConfig,
) -> Result<(GpPosterior, IntervalEstimate)> {
    config.validate()?;
    let summary = bucketize(population, sample, &BucketConfig::new(config.k)?)?;
    let posterior = sample_posterior(&summary, config)?;
    let interval = posterior.prevalence.interval()?;
    Ok((posterior, interval))
}

/// One row of the prior-uniformity scan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PriorCheckRow {
    pub alpha: f64,
    pub ks: f64,
}

/// Scans an α grid, drawing prior π samples at each value and reporting the
/// KS distance to U(0, 1). The minimizer justifies the default `alpha`.
///
/// The draws come from consecutive MCMC iterations on purpose: the scan is a
/// property of the sampler as configured, and thinning would hide exactly
/// the slow mixing that makes small α degenerate in practice.
pub fn prior_check(base: &GpConfig, alphas: &[f64]) -> Result<Vec<PriorCheckRow>> {
    if alphas.is_empty() {
        return Err(Error::InvalidInput("alpha grid is empty".into()));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let config = GpConfig { alpha, ..*base };
            let draws = sample_prior_prevalence(&config)?;
            Ok(PriorCheckRow { alpha, ks: ks_uniform_statistic(&draws)? })
        })
        .collect()
}

/// Kolmogorov–Smirnov distance between the samples and U(0, 1).
///
/// Small values mean the prior on π is close to flat; the default
/// hyperparameters were picked to (approximately) minimize this.
pub fn ks_uniform_statistic(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("KS statistic of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidInput(format!("sample {x} outside [0, 1]")));
        }
        let below = i as f64 / n;
        let above = (i + 1) as f64 / n;
        d = d.max((x - below).abs()).max((above - x).abs());
    }
    Ok(d)
}
