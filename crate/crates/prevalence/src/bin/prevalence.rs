//! Command-line front end: estimate prevalence from score/label files, run
//! coverage experiments from a JSON spec, and check prior uniformity across
//! kernel-scale values.
//!
//! Exit codes: 0 success, 2 unusable input data (file or parse problems,
//! messages name file and line), 3 invalid configuration or spec.

use clap::{Args, Parser, Subcommand, ValueEnum};
use prevalence::bbb::{self, BbbConfig};
use prevalence::bootstrap::{self, BootstrapConfig};
use prevalence::bucket::ScoredPopulation;
use prevalence::error::{Error, Result};
use prevalence::gp::{self, GpConfig};
use prevalence::interval::Method;
use prevalence::io::{
    estimates_to_json, read_experiment_spec, read_histogram_csv, read_labels_csv,
    read_scores_csv, write_estimates_csv, write_summary_csv, write_trials_csv, EstimateRecord,
};
use prevalence::seed::{substream, DEFAULT_SEED};
use prevalence::simulate::{run_experiment, ExperimentReport};
use serde::Serialize;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "prevalence",
    version,
    about = "Upper-bound prevalence estimation for rare binary outcomes",
    propagate_version = true
)]
struct Cli {
    /// Cap the worker-thread count (0 = automatic). Outputs never depend on
    /// this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate prevalence from a population file and a labeled sample.
    Estimate(EstimateArgs),
    /// Run a repeated-trial coverage experiment from a JSON spec.
    Simulate(SimulateArgs),
    /// Measure how uniform the latent-field prior over prevalence is across
    /// a grid of kernel scales.
    PriorCheck(PriorCheckArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV of raw population scores (column: score).
    #[arg(long, value_name = "FILE", required_unless_present = "histogram",
          conflicts_with = "histogram")]
    scores: Option<PathBuf>,

    /// CSV population histogram (columns: bucket_index,count). Estimators
    /// adopt the histogram's bucket count unless overridden.
    #[arg(long, value_name = "FILE")]
    histogram: Option<PathBuf>,

    /// CSV of labeled items (columns: score,label[,weight][,day]).
    #[arg(long, value_name = "FILE")]
    labels: PathBuf,

    /// bbb, gp, bootstrap, or all.
    #[arg(long, default_value = "all")]
    method: String,

    /// Bucket count for the Beta-Binomial estimator.
    #[arg(long)]
    k: Option<usize>,

    /// Per-bucket positive pseudo-count (default 1/K).
    #[arg(long)]
    a: Option<f64>,

    /// Per-bucket negative pseudo-count (default 1/K).
    #[arg(long)]
    b: Option<f64>,

    /// Bucket count for the latent-field estimator.
    #[arg(long)]
    gp_k: Option<usize>,

    /// Kernel length-scale.
    #[arg(long)]
    rho: Option<f64>,

    /// Kernel amplitude.
    #[arg(long)]
    alpha: Option<f64>,

    /// MCMC chain count.
    #[arg(long)]
    chains: Option<usize>,

    /// Kept draws per chain (warm-up uses the same count).
    #[arg(long)]
    iters: Option<usize>,

    /// Bootstrap resample count.
    #[arg(long)]
    resamples: Option<usize>,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// json keeps posterior draws; csv is a flat summary table.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment spec file.
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,

    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Per-(method, N) summary CSV (default: stdout).
    #[arg(long, value_name = "FILE")]
    summary_out: Option<PathBuf>,

    /// Per-trial long-format CSV for plotting (not written unless set).
    #[arg(long, value_name = "FILE")]
    trials_out: Option<PathBuf>,
}

#[derive(Args)]
struct PriorCheckArgs {
    /// Bucket count.
    #[arg(long, default_value_t = 100)]
    k: usize,

    /// Kernel length-scale.
    #[arg(long, default_value_t = 0.1)]
    rho: f64,

    /// Comma-separated kernel-amplitude grid to scan.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4")]
    alphas: Vec<f64>,

    /// MCMC chain count.
    #[arg(long, default_value_t = 4)]
    chains: usize,

    /// Kept draws per chain (warm-up uses the same count).
    #[arg(long, default_value_t = 1000)]
    iters: usize,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: could not configure {} threads: {e}", cli.threads);
            std::process::exit(3);
        }
    }
    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::PriorCheck(args) => cmd_prior_check(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        let code = match e {
            Error::Io { .. } | Error::Parse { .. } => 2,
            _ => 3,
        };
        std::process::exit(code);
    }
}

/// Streams to `--out` when given, otherwise stdout.
fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            Ok(Box::new(file))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn write_text(path: &Option<PathBuf>, text: &str) -> Result<()> {
    let mut out = output(path)?;
    writeln!(out, "{text}").map_err(|e| Error::Io {
        path: path.as_ref().map_or("<stdout>".into(), |p| p.display().to_string()),
        message: e.to_string(),
    })
}

fn parse_methods(selector: &str) -> Result<Vec<Method>> {
    if selector == "all" {
        Ok(vec![Method::Bbb, Method::Gp, Method::Bootstrap])
    } else {
        Ok(vec![selector.parse()?])
    }
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let methods = parse_methods(&args.method)?;
    let population = match (&args.scores, &args.histogram) {
        (Some(path), None) => read_scores_csv(path)?,
        (None, Some(path)) => read_histogram_csv(path)?,
        _ => unreachable!("clap enforces exactly one population input"),
    };
    let histogram_k = match &population {
        ScoredPopulation::Histogram(counts) => Some(counts.len()),
        ScoredPopulation::Scores(_) => None,
    };
    let sample = read_labels_csv(&args.labels)?;

    let mut bbb_config = match args.k.or(histogram_k) {
        Some(k) => BbbConfig::with_k(k),
        None => BbbConfig::default(),
    };
    if let Some(a) = args.a {
        bbb_config.a = a;
    }
    if let Some(b) = args.b {
        bbb_config.b = b;
    }

    let mut gp_config = GpConfig {
        seed: substream(args.seed, 1),
        ..GpConfig::default()
    };
    if let Some(k) = args.gp_k.or(histogram_k) {
        gp_config.k = k;
    }
    if let Some(rho) = args.rho {
        gp_config.rho = rho;
    }
    if let Some(alpha) = args.alpha {
        gp_config.alpha = alpha;
    }
    if let Some(chains) = args.chains {
        gp_config.chains = chains;
    }
    if let Some(iters) = args.iters {
        gp_config.warmup = iters;
        gp_config.kept = iters;
    }

    let bootstrap_config = BootstrapConfig {
        resamples: args.resamples.unwrap_or(BootstrapConfig::default().resamples),
        seed: substream(args.seed, 2),
    };

    let mut records = Vec::with_capacity(methods.len());
    for method in methods {
        let record = match method {
            Method::Bbb => {
                let (_, posterior, interval) =
                    bbb::estimate_detailed(&population, &sample, &bbb_config)?;
                EstimateRecord { method, interval, posterior }
            }
            Method::Gp => {
                eprintln!(
                    "sampling latent field: {} chains x {} iterations over {} buckets",
                    gp_config.chains,
                    gp_config.warmup + gp_config.kept,
                    gp_config.k
                );
                let (posterior, interval) =
                    gp::estimate_detailed(&population, &sample, &gp_config)?;
                let posterior = posterior.prevalence;
                if !posterior.converged {
                    eprintln!(
                        "warning: chains did not converge (rhat {:.3}); interval may be unreliable",
                        posterior.rhat.unwrap_or(f64::NAN)
                    );
                }
                EstimateRecord { method, interval, posterior }
            }
            Method::Bootstrap => {
                let (posterior, interval) = bootstrap::estimate_detailed(&sample, &bootstrap_config)?;
                EstimateRecord { method, interval, posterior }
            }
        };
        records.push(record);
    }

    match args.format {
        Format::Json => write_text(&args.out, &estimates_to_json(&records)),
        Format::Csv => write_estimates_csv(output(&args.out)?, &records),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut spec = read_experiment_spec(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }

    // One library call per sample size keeps per-N progress on stderr;
    // per-trial seeds depend only on (seed, N, trial), so the merged report
    // is identical to a single full-grid run.
    let n_grid = spec.n_grid.clone();
    let mut report: Option<ExperimentReport> = None;
    for &n in &n_grid {
        let t0 = Instant::now();
        let mut single = spec.clone();
        single.n_grid = vec![n];
        let partial = run_experiment(&single)?;
        if report.is_none() {
            eprintln!(
                "population ready: ground truth {:.6e}, curve scale {:.6e}",
                partial.ground_truth, partial.curve_scale
            );
        }
        eprintln!(
            "N={n}: {} trials x {} methods in {:.1}s",
            spec.trials,
            spec.methods.len(),
            t0.elapsed().as_secs_f64()
        );
        match &mut report {
            None => report = Some(partial),
            Some(r) => {
                r.summaries.extend(partial.summaries);
                r.records.extend(partial.records);
            }
        }
    }
    let report = report.expect("n_grid validated non-empty");

    write_summary_csv(output(&args.summary_out)?, &report.summaries)?;
    if let Some(path) = &args.trials_out {
        write_trials_csv(output(&Some(path.clone()))?, &report.records)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PriorCheckReport {
    draws: usize,
    rows: Vec<gp::PriorCheckRow>,
    minimizer_alpha: f64,
}

fn cmd_prior_check(args: PriorCheckArgs) -> Result<()> {
    let base = GpConfig {
        k: args.k,
        rho: args.rho,
        chains: args.chains,
        warmup: args.iters,
        kept: args.iters,
        seed: args.seed,
        ..GpConfig::default()
    };
    if args.alphas.is_empty() {
        return Err(Error::InvalidConfig("alpha grid is empty".into()));
    }
    eprintln!(
        "prior scan: {} alphas x {} draws (K={}, rho={})",
        args.alphas.len(),
        base.chains * base.kept,
        base.k,
        base.rho
    );
    let t0 = Instant::now();
    let rows = gp::prior_check(&base, &args.alphas)?;
    eprintln!("scanned in {:.1}s", t0.elapsed().as_secs_f64());

    let minimizer = rows
        .iter()
        .min_by(|x, y| x.ks.total_cmp(&y.ks))
        .expect("grid validated non-empty");
    let report = PriorCheckReport {
        draws: base.chains * base.kept,
        rows: rows.clone(),
        minimizer_alpha: minimizer.alpha,
    };

    match args.format {
        Format::Json => write_text(
            &args.out,
            &serde_json::to_string_pretty(&report).expect("plain data serializes"),
        ),
        Format::Csv => {
            let mut out = output(&args.out)?;
            let mut text = String::from("alpha,ks\n");
            for row in &report.rows {
                text.push_str(&format!("{},{}\n", row.alpha, row.ks));
            }
            out.write_all(text.as_bytes()).map_err(|e| Error::Io {
                path: "<csv output>".into(),
                message: e.to_string(),
            })
        }
    }
}
