//! Release gate: eight end-to-end checks covering closed-form correctness,
//! sampler calibration, coverage behavior, pathologies, the day-partitioned
//! formulas, and determinism. Each check writes one PASS/FAIL line straight
//! to stderr (bypassing test capture) and then asserts.

use prevalence::bbb::{self, BbbConfig, DaySummary};
use prevalence::bootstrap::{self, BootstrapConfig};
use prevalence::bucket::{BucketSummary, LabeledEntry, LabeledSample, ScoredPopulation};
use prevalence::gp::{self, GpConfig};
use prevalence::interval::Method;
use prevalence::seed::rng_for;
use prevalence::simulate::{
    run_experiment, CalibrationCurve, ExperimentReport, ExperimentSpec, MethodSummary,
    PopulationSpec, SamplingStrategy,
};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use std::io::Write as _;
use std::sync::OnceLock;
use std::time::Instant;

fn report(idx: usize, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "[acceptance {idx}/8] {}: {name} — {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    std::io::stderr().lock().write_all(line.as_bytes()).unwrap();
    assert!(pass, "{name}: {detail}");
}

// ---------------------------------------------------------------------------
// 1. Closed-form prevalence moments against brute-force Monte-Carlo.
// ---------------------------------------------------------------------------

#[test]
fn closed_form_moments_match_monte_carlo() {
    const CONFIGS: usize = 50;
    const DRAWS: usize = 1_000_000;
    let t0 = Instant::now();
    let mut cfg_rng = rng_for(2718, 0);
    let mut worst_mean_z = 0.0f64;
    let mut worst_var_z = 0.0f64;
    let mut draws = vec![0.0f64; DRAWS];

    for cfg_idx in 0..CONFIGS {
        let k = cfg_rng.random_range(1..=10);
        let raw: Vec<f64> = (0..k).map(|_| cfg_rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let head: f64 = weights[..k - 1].iter().sum();
        weights[k - 1] = 1.0 - head;
        let pos: Vec<u64> = (0..k).map(|_| cfg_rng.random_range(0..=20)).collect();
        let neg: Vec<u64> = (0..k).map(|_| cfg_rng.random_range(0..=50)).collect();
        let a = 0.05 + 2.0 * cfg_rng.random::<f64>();
        let b = 0.05 + 2.0 * cfg_rng.random::<f64>();

        let summary = BucketSummary::new(weights.clone(), pos, neg).unwrap();
        let config = BbbConfig { k, a, b };
        let posterior = bbb::posterior(&summary, &config).unwrap();
        let closed = bbb::prevalence(&posterior, &summary).unwrap();

        let samplers: Vec<Beta<f64>> = (0..k)
            .map(|j| Beta::new(posterior.alpha[j], posterior.beta[j]).unwrap())
            .collect();
        let mut mc_rng = rng_for(2718, cfg_idx as u64 + 1);
        for d in draws.iter_mut() {
            *d = samplers
                .iter()
                .zip(&weights)
                .map(|(s, w)| w * s.sample(&mut mc_rng))
                .sum();
        }
        let n = DRAWS as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = draws.iter().map(|d| (d - mean).powi(4)).sum::<f64>() / n;
        let se_mean = (var / n).sqrt();
        let se_var = ((m4 - var * var) / n).sqrt();

        worst_mean_z = worst_mean_z.max((closed.mean - mean).abs() / se_mean);
        worst_var_z = worst_var_z.max((closed.variance - var).abs() / se_var);
    }

    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst_mean_z <= 3.0 && worst_var_z <= 3.0 && elapsed < 60.0;
    report(
        1,
        "closed-form moments vs 1e6-draw Monte-Carlo over 50 bucket configs",
        pass,
        &format!(
            "max |z| mean {worst_mean_z:.2}, variance {worst_var_z:.2} (limit 3.0) in {elapsed:.1}s"
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Prior over prevalence is near-uniform exactly at unit kernel amplitude.
// ---------------------------------------------------------------------------

#[test]
fn prior_is_closest_to_uniform_at_unit_amplitude() {
    let t0 = Instant::now();
    let base = GpConfig::default();
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
    let rows = gp::prior_check(&base, &grid).unwrap();
    let ks_at_one = rows.iter().find(|r| r.alpha == 1.0).unwrap().ks;
    let minimizer = rows.iter().min_by(|x, y| x.ks.total_cmp(&y.ks)).unwrap().alpha;
    let elapsed = t0.elapsed().as_secs_f64();

    let pass = ks_at_one < 0.08 && minimizer == 1.0 && elapsed < 120.0;
    let detail: Vec<String> = rows.iter().map(|r| format!("{}:{:.4}", r.alpha, r.ks)).collect();
    report(
        2,
        "4000 prior draws: KS(alpha=1) < 0.08 and grid minimizer at 1",
        pass,
        &format!("KS {} → minimizer {minimizer} in {elapsed:.1}s", detail.join(" ")),
    );
}

// ---------------------------------------------------------------------------
// 3. Single-bucket posterior mean against deterministic quadrature.
// ---------------------------------------------------------------------------

#[test]
fn single_bucket_posterior_matches_quadrature() {
    // E[p | n=100, n+=3] for the K=1 model, i.e. the posterior mean of
    // Phi(q) under density N(q; 0, 2+1e-9) * Phi(q)^3 * Phi(-q)^97,
    // integrated to 40 decimal digits externally.
    const QUADRATURE_MEAN: f64 = 0.0353205370277;

    let t0 = Instant::now();
    let summary = BucketSummary::new(vec![1.0], vec![3], vec![97]).unwrap();
    let config = GpConfig { k: 1, warmup: 1000, kept: 8000, ..GpConfig::default() };
    let posterior = gp::sample_posterior(&summary, &config).unwrap();
    let mean = posterior.prevalence.mean;
    let rel = (mean - QUADRATURE_MEAN).abs() / QUADRATURE_MEAN;
    let elapsed = t0.elapsed().as_secs_f64();

    let pass = rel < 0.02 && posterior.prevalence.converged && elapsed < 60.0;
    report(
        3,
        "single-bucket posterior mean within 2% of quadrature",
        pass,
        &format!(
            "mean {mean:.6} vs {QUADRATURE_MEAN:.6} (rel {:.2}%), rhat {:.3}, {elapsed:.1}s",
            100.0 * rel,
            posterior.prevalence.rhat.unwrap_or(f64::NAN)
        ),
    );
}

// ---------------------------------------------------------------------------
// 4 & 5. Shared coverage experiment: rare-positive population, five sample
// sizes, 200 paired trials per size, all three estimators.
// ---------------------------------------------------------------------------

static COVERAGE: OnceLock<(ExperimentReport, f64)> = OnceLock::new();

fn coverage_spec() -> ExperimentSpec {
    ExperimentSpec {
        population: PopulationSpec {
            m: 1_000_000,
            lambda: 10.0,
            curve: CalibrationCurve::logistic_highend_drop(),
            target_prevalence: Some(3.0e-4),
            seed: 20,
        },
        strategy: SamplingStrategy { beta: 3.0 },
        n_grid: vec![5_000, 10_000, 20_000, 30_000, 50_000],
        trials: 200,
        methods: vec![Method::Bbb, Method::Gp, Method::Bootstrap],
        seed: 1,
        bbb: BbbConfig::default(),
        gp: GpConfig::default(),
        bootstrap: BootstrapConfig::default(),
    }
}

fn coverage() -> &'static (ExperimentReport, f64) {
    COVERAGE.get_or_init(|| {
        let mut err = std::io::stderr().lock();
        writeln!(err, "[acceptance] coverage experiment: 5 sizes x 200 trials x 3 methods ...")
            .unwrap();
        drop(err);
        let t0 = Instant::now();
        let report = run_experiment(&coverage_spec()).unwrap();
        (report, t0.elapsed().as_secs_f64())
    })
}

fn cell(r: &ExperimentReport, method: Method, n: usize) -> &MethodSummary {
    r.summaries.iter().find(|s| s.method == method && s.n == n).unwrap()
}

#[test]
fn upper_bound_misses_order_bootstrap_above_bucketed_methods() {
    let (r, elapsed) = coverage();
    let bbb_30k = cell(r, Method::Bbb, 30_000).wrong_upper_rate;
    let gp_30k = cell(r, Method::Gp, 30_000).wrong_upper_rate;
    let boot_30k = cell(r, Method::Bootstrap, 30_000).wrong_upper_rate;
    let bbb_5k = cell(r, Method::Bbb, 5_000).wrong_upper_rate;
    let gp_5k = cell(r, Method::Gp, 5_000).wrong_upper_rate;
    let boot_5k = cell(r, Method::Bootstrap, 5_000).wrong_upper_rate;
    let failures: usize = r.summaries.iter().map(|s| s.failures).sum();

    let pass = bbb_30k <= 0.06
        && gp_30k <= 0.06
        && boot_30k > bbb_30k
        && boot_30k > gp_30k
        && boot_5k > 0.10
        && bbb_5k <= 0.06
        && gp_5k <= 0.06
        && failures == 0
        && *elapsed < 1800.0;
    report(
        4,
        "upper-bound miss rates: bucketed methods within band, bootstrap above",
        pass,
        &format!(
            "N=30000 bbb {bbb_30k:.3} gp {gp_30k:.3} boot {boot_30k:.3}; \
             N=5000 bbb {bbb_5k:.3} gp {gp_5k:.3} boot {boot_5k:.3}; \
             ground truth {:.3e}; {failures} failures; {elapsed:.0}s",
            r.ground_truth
        ),
    );
}

#[test]
fn interval_widths_sit_in_band_and_shrink_with_n() {
    let (r, _) = coverage();
    let bbb_30k = cell(r, Method::Bbb, 30_000).avg_ci_size;
    let gp_30k = cell(r, Method::Gp, 30_000).avg_ci_size;
    let band = 1.0e-4..=1.0e-3;

    // Monotone non-increasing in N within two standard errors of each step's
    // difference, for every method.
    let grid = [10_000usize, 20_000, 30_000, 50_000];
    let mut monotone = true;
    let mut worst = f64::NEG_INFINITY;
    for method in [Method::Bbb, Method::Gp, Method::Bootstrap] {
        let stats: Vec<(f64, f64)> = grid
            .iter()
            .map(|&n| {
                let sizes: Vec<f64> = r
                    .records
                    .iter()
                    .filter(|rec| rec.method == method && rec.n == n)
                    .map(|rec| rec.metrics.as_ref().unwrap().ci_size)
                    .collect();
                let m = sizes.iter().sum::<f64>() / sizes.len() as f64;
                let v = sizes.iter().map(|s| (s - m).powi(2)).sum::<f64>()
                    / (sizes.len() - 1) as f64;
                (m, (v / sizes.len() as f64).sqrt())
            })
            .collect();
        for w in stats.windows(2) {
            let (m1, se1) = w[0];
            let (m2, se2) = w[1];
            let slack = 2.0 * (se1 * se1 + se2 * se2).sqrt();
            worst = worst.max(m2 - m1 - slack);
            if m2 > m1 + slack {
                monotone = false;
            }
        }
    }

    let pass = band.contains(&bbb_30k) && band.contains(&gp_30k) && monotone;
    report(
        5,
        "interval widths in [1e-4, 1e-3] at N=30000 and non-increasing in N",
        pass,
        &format!(
            "bbb {bbb_30k:.3e}, gp {gp_30k:.3e}; worst monotonicity slack excess {worst:.2e}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Zero observed positives: resampling degenerates to 0, priors do not.
// ---------------------------------------------------------------------------

#[test]
fn zero_positive_samples_split_the_methods() {
    let population = ScoredPopulation::from_histogram(vec![400, 300, 200, 80, 20]).unwrap();
    let entries: Vec<LabeledEntry> =
        (0..100).map(|i| LabeledEntry::new((i as f64 + 0.5) / 100.0, false)).collect();
    let sample = LabeledSample::new(entries).unwrap();

    let boot = bootstrap::estimate(&sample, &BootstrapConfig::default()).unwrap();
    let bbb = bbb::estimate(&population, &sample, &BbbConfig::default()).unwrap();
    let gp = gp::estimate(&population, &sample, &GpConfig { k: 5, ..GpConfig::default() })
        .unwrap();

    let pass = boot.upper == 0.0
        && boot.point == 0.0
        && boot.lower == 0.0
        && bbb.upper > 0.0
        && gp.upper > 0.0;
    report(
        6,
        "zero positives: bootstrap upper exactly 0, bucketed uppers positive",
        pass,
        &format!("boot {:.1e}, bbb {:.3e}, gp {:.3e}", boot.upper, bbb.upper, gp.upper),
    );
}

// ---------------------------------------------------------------------------
// 7. Day-partitioned moment formulas against direct Beta-moment evaluation.
// ---------------------------------------------------------------------------

fn beta_mean_var(alpha: f64, beta: f64) -> (f64, f64) {
    let s = alpha + beta;
    (alpha / s, alpha * beta / (s * s * (s + 1.0)))
}

#[test]
fn day_partitioned_formulas_match_direct_evaluation() {
    let day1 = DaySummary {
        summary: BucketSummary::new(
            vec![0.5, 0.3, 0.15, 0.05],
            vec![0, 1, 2, 5],
            vec![30, 20, 10, 2],
        )
        .unwrap(),
        share: 0.4,
    };
    let day2 = DaySummary {
        summary: BucketSummary::new(
            vec![0.4, 0.3, 0.2, 0.1],
            vec![1, 0, 3, 4],
            vec![25, 15, 8, 3],
        )
        .unwrap(),
        share: 0.6,
    };
    let days = [day1.clone(), day2.clone()];
    let config = BbbConfig::with_k(4);

    // Fine variant: one Beta cell per (bucket, day), pseudo-counts split
    // across days; recomputed here from scratch.
    let fine = bbb::time_partitioned(&days, &config).unwrap();
    let (mut mean, mut var) = (0.0, 0.0);
    for day in &days {
        for j in 0..4 {
            let (m, v) = beta_mean_var(
                config.a / 2.0 + day.summary.pos()[j] as f64,
                config.b / 2.0 + day.summary.neg()[j] as f64,
            );
            let w = day.share * day.summary.weights()[j];
            mean += w * m;
            var += w * w * v;
        }
    }
    let fine_mean_err = (fine.mean - mean).abs();
    let fine_var_err = (fine.variance - var).abs();

    // Coarse variant: pool the days, then one Beta cell per bucket.
    let merged = bbb::merge_days(&days).unwrap();
    let coarse =
        bbb::prevalence(&bbb::posterior(&merged, &config).unwrap(), &merged).unwrap();
    let (mut cmean, mut cvar) = (0.0, 0.0);
    for j in 0..4 {
        let (m, v) = beta_mean_var(
            config.a + merged.pos()[j] as f64,
            config.b + merged.neg()[j] as f64,
        );
        cmean += merged.weights()[j] * m;
        cvar += merged.weights()[j] * merged.weights()[j] * v;
    }
    let coarse_mean_err = (coarse.mean - cmean).abs();
    let coarse_var_err = (coarse.variance - cvar).abs();

    // Collapse: a single merged partition with the full pseudo-counts is the
    // pooled estimator, exactly.
    let collapsed =
        bbb::time_partitioned(&[DaySummary { summary: merged.clone(), share: 1.0 }], &config)
            .unwrap();
    let collapse_mean_err = (collapsed.mean - coarse.mean).abs();
    let collapse_var_err = (collapsed.variance - coarse.variance).abs();

    let pass = fine_mean_err <= 1e-12
        && fine_var_err <= 1e-12
        && coarse_mean_err <= 1e-12
        && coarse_var_err <= 1e-12
        && collapse_mean_err == 0.0
        && collapse_var_err == 0.0;
    report(
        7,
        "day-partitioned fine/coarse moments match direct evaluation",
        pass,
        &format!(
            "fine |d| ({fine_mean_err:.1e}, {fine_var_err:.1e}), coarse |d| \
             ({coarse_mean_err:.1e}, {coarse_var_err:.1e}), collapse |d| \
             ({collapse_mean_err:.1e}, {collapse_var_err:.1e})"
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Byte-level determinism, independent of worker-thread count.
// ---------------------------------------------------------------------------

#[test]
fn outputs_are_byte_identical_across_thread_counts() {
    // Library level: a small full experiment under 1-thread and 4-thread
    // pools must serialize identically.
    let spec = ExperimentSpec {
        population: PopulationSpec {
            m: 20_000,
            lambda: 10.0,
            curve: CalibrationCurve::Constant { value: 0.02 },
            target_prevalence: None,
            seed: 5,
        },
        strategy: SamplingStrategy::default(),
        n_grid: vec![400],
        trials: 4,
        methods: vec![Method::Bbb, Method::Gp, Method::Bootstrap],
        seed: 9,
        bbb: BbbConfig::default(),
        gp: GpConfig { k: 10, chains: 2, warmup: 100, kept: 100, ..GpConfig::default() },
        bootstrap: BootstrapConfig { resamples: 200, ..BootstrapConfig::default() },
    };
    let run_in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| serde_json::to_vec(&run_experiment(&spec).unwrap()).unwrap())
    };
    let lib_equal = run_in_pool(1) == run_in_pool(4);

    // Estimator level: repeated runs reproduce the posterior draws bit for
    // bit.
    let population = ScoredPopulation::from_histogram(vec![50, 30, 15, 4, 1]).unwrap();
    let entries: Vec<LabeledEntry> = (0..50)
        .map(|i| LabeledEntry::new((i as f64 + 0.5) / 50.0, i % 11 == 0))
        .collect();
    let sample = LabeledSample::new(entries).unwrap();
    let gp_config = GpConfig { k: 5, chains: 2, warmup: 200, kept: 200, ..GpConfig::default() };
    let gp_a = gp::estimate_detailed(&population, &sample, &gp_config).unwrap().0;
    let gp_b = gp::estimate_detailed(&population, &sample, &gp_config).unwrap().0;
    let gp_equal = gp_a.prevalence.samples == gp_b.prevalence.samples
        && gp_a.prevalence.samples.is_some();
    let boot_a = bootstrap::estimate_detailed(&sample, &BootstrapConfig::default()).unwrap().0;
    let boot_b = bootstrap::estimate_detailed(&sample, &BootstrapConfig::default()).unwrap().0;
    let boot_equal = boot_a.samples == boot_b.samples && boot_a.samples.is_some();

    // Binary level: the CLI with --threads 1 and --threads 4 writes the same
    // bytes.
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    std::fs::write(
        &spec_path,
        r#"{
            "population": {"m": 20000, "lambda": 10.0,
                           "curve": {"family": "constant", "value": 0.02}, "seed": 5},
            "n_grid": [300],
            "trials": 3,
            "methods": ["bbb", "gp", "bootstrap"],
            "seed": 9,
            "gp": {"k": 10, "chains": 2, "warmup": 50, "kept": 50},
            "bootstrap": {"resamples": 100}
        }"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let summary = dir.path().join(format!("summary_{threads}.csv"));
        let trials = dir.path().join(format!("trials_{threads}.csv"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_prevalence"))
            .args([
                "simulate",
                "--threads",
                threads,
                "--spec",
                spec_path.to_str().unwrap(),
                "--summary-out",
                summary.to_str().unwrap(),
                "--trials-out",
                trials.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(status.status.success());
        outputs.push((std::fs::read(summary).unwrap(), std::fs::read(trials).unwrap()));
    }
    let cli_equal = outputs[0] == outputs[1];

    let pass = lib_equal && gp_equal && boot_equal && cli_equal;
    report(
        8,
        "fixed-seed outputs independent of thread count (library, estimators, CLI)",
        pass,
        &format!(
            "library {lib_equal}, sampler draws {gp_equal}, resamples {boot_equal}, \
             CLI files {cli_equal}"
        ),
    );
}
