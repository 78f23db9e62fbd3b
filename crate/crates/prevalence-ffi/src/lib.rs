//! C ABI for the prevalence estimators.
//!
//! The interface follows the usual opaque-handle pattern: populations and
//! labeled samples are built once behind pointers, estimators fill a flat
//! [`PrevInterval`] struct, and every call returns a [`PrevStatus`] code.
//!
//! Safety contract:
//! - all pointers are null-checked before use; panics never cross the
//!   boundary (they surface as `PREV_STATUS_INTERNAL`)
//! - every constructor has a matching `*_free`; freeing null is a no-op
//! - on failure, `prev_last_error_message` returns a thread-local string
//!   valid until the next failing call on the same thread

use prevalence::bbb::{self, BbbConfig};
use prevalence::bootstrap::{self, BootstrapConfig};
use prevalence::bucket::{LabeledEntry, LabeledSample, ScoredPopulation};
use prevalence::error::Error;
use prevalence::gp::{self, GpConfig};
use prevalence::interval::{IntervalEstimate, PrevalencePosterior};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result code of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrevStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Input data was rejected (score range, label values, weights, ...).
    InvalidArgument = 2,
    /// Estimator configuration was rejected.
    InvalidConfig = 3,
    /// A panic was caught at the boundary; state is unchanged.
    Internal = 4,
}

/// Full population of classifier scores (raw or histogram form).
pub struct PrevPopulation(ScoredPopulation);

/// Labeled sample with optional inclusion weights.
pub struct PrevSample(LabeledSample);

/// Point estimate, 95% interval, and the posterior moments behind them.
/// `rhat` is NaN for non-MCMC methods; `converged` is always true for them.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PrevInterval {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub mean: f64,
    pub variance: f64,
    pub rhat: f64,
    pub converged: bool,
}

/// Latent-field estimator settings; get defaults from
/// `prev_gp_options_default` and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PrevGpOptions {
    pub k: usize,
    pub rho: f64,
    pub alpha: f64,
    pub jitter: f64,
    pub chains: usize,
    pub warmup: usize,
    pub kept: usize,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
}

fn fail(e: &Error) -> PrevStatus {
    set_error(&e.to_string());
    match e {
        Error::InvalidConfig(_) | Error::BucketMismatch { .. } => PrevStatus::InvalidConfig,
        _ => PrevStatus::InvalidArgument,
    }
}

fn null_pointer(what: &str) -> PrevStatus {
    set_error(&format!("{what} must not be null"));
    PrevStatus::NullPointer
}

/// Runs the body with a panic guard so unwinding never crosses the ABI.
fn guarded(f: impl FnOnce() -> PrevStatus) -> PrevStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            PrevStatus::Internal
        }
    }
}

unsafe fn slice_arg<'a, T>(data: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if data.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(data, len))
    }
}

fn fill_interval(
    out: &mut PrevInterval,
    interval: &IntervalEstimate,
    posterior: &PrevalencePosterior,
) {
    *out = PrevInterval {
        point: interval.point,
        lower: interval.lower,
        upper: interval.upper,
        mean: posterior.mean,
        variance: posterior.variance,
        rhat: posterior.rhat.unwrap_or(f64::NAN),
        converged: posterior.converged,
    };
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn prev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn prev_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a population from `len` raw scores in [0, 1].
///
/// # Safety
/// `scores` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prev_population_from_scores(
    scores: *const f64,
    len: usize,
    out: *mut *mut PrevPopulation,
) -> PrevStatus {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        let Some(scores) = slice_arg(scores, len) else {
            return null_pointer("scores");
        };
        match ScoredPopulation::from_scores(scores.to_vec()) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(PrevPopulation(p)));
                PrevStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Builds a population from `len` per-bucket counts (equal-width buckets
/// over [0, 1], in order).
///
/// # Safety
/// `counts` must point to `len` readable uint64s; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prev_population_from_histogram(
    counts: *const u64,
    len: usize,
    out: *mut *mut PrevPopulation,
) -> PrevStatus {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        let Some(counts) = slice_arg(counts, len) else {
            return null_pointer("counts");
        };
        match ScoredPopulation::from_histogram(counts.to_vec()) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(PrevPopulation(p)));
                PrevStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Frees a population handle; null is a no-op.
///
/// # Safety
/// `population` must be a pointer returned by a population constructor, not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn prev_population_free(population: *mut PrevPopulation) {
    if !population.is_null() {
        drop(Box::from_raw(population));
    }
}

/// Builds a labeled sample from parallel arrays. `labels` entries must be 0
/// or 1. `weights` may be null for unit weights; entries must be positive.
///
/// # Safety
/// `scores` and `labels` must point to `len` readable elements, `weights` to
/// `len` readable doubles or be null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prev_sample_new(
    scores: *const f64,
    labels: *const u8,
    weights: *const f64,
    len: usize,
    out: *mut *mut PrevSample,
) -> PrevStatus {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        let Some(scores) = slice_arg(scores, len) else {
            return null_pointer("scores");
        };
        let Some(labels) = slice_arg(labels, len) else {
            return null_pointer("labels");
        };
        let weights = if weights.is_null() {
            None
        } else {
            Some(std::slice::from_raw_parts(weights, len))
        };

        let mut entries = Vec::with_capacity(len);
        for i in 0..len {
            let label = match labels[i] {
                0 => false,
                1 => true,
                other => {
                    set_error(&format!("label at index {i} must be 0 or 1, got {other}"));
                    return PrevStatus::InvalidArgument;
                }
            };
            let weight = weights.map_or(1.0, |w| w[i]);
            entries.push(LabeledEntry { score: scores[i], label, weight, day: None });
        }
        match LabeledSample::new(entries) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(PrevSample(s)));
                PrevStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Frees a sample handle; null is a no-op.
///
/// # Safety
/// `sample` must be a pointer returned by `prev_sample_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn prev_sample_free(sample: *mut PrevSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Conjugate per-bucket estimator with `k` buckets. Pass `a <= 0` or
/// `b <= 0` to use the pseudo-count-preserving default 1/k.
///
/// # Safety
/// `population` and `sample` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prev_estimate_bbb(
    population: *const PrevPopulation,
    sample: *const PrevSample,
    k: usize,
    a: f64,
    b: f64,
    out: *mut PrevInterval,
) -> PrevStatus {
    guarded(|| {
        let (Some(population), Some(sample), Some(out)) =
            (population.as_ref(), sample.as_ref(), out.as_mut())
        else {
            return null_pointer("population/sample/out");
        };
        // with_k(0) would divide by zero computing 1/k; build with a safe k,
        // then restore the raw value so validation can report it.
        let mut config = BbbConfig::with_k(k.max(1));
        config.k = k;
        if a > 0.0 {
            config.a = a;
        }
        if b > 0.0 {
            config.b = b;
        }
        match bbb::estimate_detailed(&population.0, &sample.0, &config) {
            Ok((_, posterior, interval)) => {
                fill_interval(out, &interval, &posterior);
                PrevStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Defaults for the latent-field estimator (100 buckets, length-scale 0.1,
/// unit amplitude, 4 chains of 1000 warm-up + 1000 kept draws).
#[no_mangle]
pub extern "C" fn prev_gp_options_default() -> PrevGpOptions {
    let d = GpConfig::default();
    PrevGpOptions {
        k: d.k,
        rho: d.rho,
        alpha: d.alpha,
        jitter: d.jitter,
        chains: d.chains,
        warmup: d.warmup,
        kept: d.kept,
        seed: d.seed,
    }
}

/// Latent-field estimator. `options` may be null for defaults. A
/// non-converged run still fills `out` (check `out->converged`).
///
/// # Safety
/// `population` and `sample` must be live handles; `options` must be null or
/// readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prev_estimate_gp(
    population: *const PrevPopulation,
    sample: *const PrevSample,
    options: *const PrevGpOptions,
    out: *mut PrevInterval,
) -> PrevStatus {
    guarded(|| {
        let (Some(population), Some(sample), Some(out)) =
            (population.as_ref(), sample.as_ref(), out.as_mut())
        else {
            return null_pointer("population/sample/out");
        };
        let config = match options.as_ref() {
            None => GpConfig::default(),
            Some(o) => GpConfig {
                k: o.k,
                rho: o.rho,
                alpha: o.alpha,
                jitter: o.jitter,
                chains: o.chains,
                warmup: o.warmup,
                kept: o.kept,
                seed: o.seed,
            },
        };
        match gp::estimate_detailed(&population.0, &sample.0, &config) {
            Ok((posterior, interval)) => {
                fill_interval(out, &interval, &posterior.prevalence);
                PrevStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Weighted-resampling baseline. `resamples` must be at least 2.
///
/// # Safety
/// `sample` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prev_estimate_bootstrap(
    sample: *const PrevSample,
    resamples: usize,
    seed: u64,
    out: *mut PrevInterval,
) -> PrevStatus {
    guarded(|| {
        let (Some(sample), Some(out)) = (sample.as_ref(), out.as_mut()) else {
            return null_pointer("sample/out");
        };
        let config = BootstrapConfig { resamples, seed };
        match bootstrap::estimate_detailed(&sample.0, &config) {
            Ok((posterior, interval)) => {
                fill_interval(out, &interval, &posterior);
                PrevStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
