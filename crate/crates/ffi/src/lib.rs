//! C ABI for `qoco`.
//!
//! Every fallible function returns a [`QocoStatus`]; on failure the message
//! is available from [`qoco_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Output arrays
//! are caller-allocated with the length stated per function.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qoco::cgrad::estimate_gradient_c;
use qoco::harness::{csv, run_one, Experiment, ExperimentConfig, TrialResult};
use qoco::losses::{CustomLoss, Loss, LossOracle};
use qoco::qgrad::{derive_params, resolve_convention, Convention, QuantumEstimator};
use qoco::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QocoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    DimensionMismatch = 4,
    DomainViolation = 5,
    MemoryGuard = 6,
    Calibration = 7,
    Runtime = 8,
    Panic = 9,
}

/// Loss callback: returns f(x) for the `n` coordinates at `x`.
pub type QocoLossFn = Option<unsafe extern "C" fn(x: *const f64, n: usize, user_data: *mut c_void) -> f64>;

/// Register widths and derived constants of one quantum estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QocoParams {
    pub beta: f64,
    /// Qubits per coordinate register.
    pub b: u32,
    /// Fractional bits of the phase register.
    pub c: u32,
    /// `2^(b n)`.
    pub amplitudes: u64,
    /// L1 error threshold the estimate meets with probability `1 - rho`.
    pub error_bound: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QocoRunSummary {
    pub regret: f64,
    pub bound: f64,
    pub comparator_objective: f64,
    pub bound_satisfied: bool,
    pub comparator_converged: bool,
    pub lemma_exceedances: u64,
    pub total_queries: u64,
    pub rounds: u64,
    pub dim: u64,
}

/// A validated experiment configuration.
pub struct QocoExperiment {
    inner: Experiment,
}

/// One finished game.
pub struct QocoRun {
    result: TrialResult,
    csv: CString,
}

/// Settings of the simulated quantum gradient estimator.
pub struct QocoQuantumEstimator {
    inner: QuantumEstimator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

fn status_of(e: &Error) -> QocoStatus {
    match e {
        Error::InRound { source, .. } => status_of(source),
        Error::DimensionMismatch { .. } => QocoStatus::DimensionMismatch,
        Error::DomainViolation { .. } => QocoStatus::DomainViolation,
        Error::MemoryGuard { .. } => QocoStatus::MemoryGuard,
        Error::Calibration(_) => QocoStatus::Calibration,
        Error::Config(_) | Error::ScheduleMismatch(_) => QocoStatus::Config,
        Error::InvalidParameter(_) | Error::NonConvex(_) | Error::RoundOutOfRange { .. } | Error::ScaleGuard { .. } => {
            QocoStatus::InvalidArgument
        }
        _ => QocoStatus::Runtime,
    }
}

fn fail(status: QocoStatus, message: impl Into<String>) -> QocoStatus {
    set_error(message.into());
    status
}

/// Runs `body`, turning errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), QocoStatus>) -> QocoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QocoStatus::Ok,
        Ok(Err(status)) => status,
        Err(panic) => {
            let what = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(QocoStatus::Panic, format!("panic: {what}"))
        }
    }
}

fn check(e: Error) -> QocoStatus {
    fail(status_of(&e), e.to_string())
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), QocoStatus> {
    if p.is_null() {
        Err(fail(QocoStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

struct UserData(*mut c_void);
// the caller promises the callback and its data may be used from the calling thread
unsafe impl Send for UserData {}
unsafe impl Sync for UserData {}

fn callback_oracle(loss: QocoLossFn, user_data: *mut c_void, lipschitz: f64) -> Result<LossOracle, QocoStatus> {
    let Some(f) = loss else {
        return Err(fail(QocoStatus::NullPointer, "loss callback is null"));
    };
    let data = UserData(user_data);
    let value = Arc::new(move |x: &[f64]| {
        let data = &data;
        unsafe { f(x.as_ptr(), x.len(), data.0) }
    });
    let custom = CustomLoss { name: "c callback".into(), value, gradient: None };
    LossOracle::custom(Loss::Custom(custom), None, lipschitz, 0.0).map_err(check)
}

unsafe fn slice<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], QocoStatus> {
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn write_out(p: *mut f64, values: &[f64]) {
    if !p.is_null() {
        ptr::copy_nonoverlapping(values.as_ptr(), p, values.len());
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qoco_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qoco_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Derives the register widths for one estimate.
///
/// # Safety
/// `out` must point to a writable `QocoParams`.
#[no_mangle]
pub unsafe extern "C" fn qoco_derive_params(
    n: usize,
    lipschitz: f64,
    rho: f64,
    p: f64,
    r: f64,
    r_prime: f64,
    memory_guard: u64,
    out: *mut QocoParams,
) -> QocoStatus {
    guard(|| {
        non_null(out, "out")?;
        let q = derive_params(n, lipschitz, rho, p, r, r_prime, memory_guard).map_err(check)?;
        *out = QocoParams { beta: q.beta, b: q.b, c: q.c, amplitudes: q.amplitudes() as u64, error_bound: q.lemma1_bound() };
        Ok(())
    })
}

/// Re-runs the decoding calibration; fails with `QOCO_STATUS_CALIBRATION`
/// if the built-in convention does not decode on-grid slopes exactly.
#[no_mangle]
pub extern "C" fn qoco_calibrate() -> QocoStatus {
    guard(|| {
        let record = resolve_convention().map_err(check)?;
        if record.convention != Convention::CALIBRATED {
            return Err(fail(QocoStatus::Calibration, format!("calibrated convention {} differs", record.convention)));
        }
        Ok(())
    })
}

/// # Safety
/// `out` must point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn qoco_quantum_estimator_new(
    lipschitz: f64,
    rho: f64,
    p: f64,
    memory_guard: u64,
    out: *mut *mut QocoQuantumEstimator,
) -> QocoStatus {
    guard(|| {
        non_null(out, "out")?;
        for (name, v) in [("lipschitz", lipschitz), ("rho", rho), ("p", p)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(fail(QocoStatus::InvalidArgument, format!("{name} must be positive, got {v}")));
            }
        }
        if memory_guard == 0 {
            return Err(fail(QocoStatus::InvalidArgument, "memory_guard must be positive"));
        }
        let inner = QuantumEstimator { memory_guard, ..QuantumEstimator::new(lipschitz, rho, p) };
        *out = Box::into_raw(Box::new(QocoQuantumEstimator { inner }));
        Ok(())
    })
}

/// # Safety
/// `estimator` must be NULL or a handle from `qoco_quantum_estimator_new`
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn qoco_quantum_estimator_free(estimator: *mut QocoQuantumEstimator) {
    if !estimator.is_null() {
        drop(Box::from_raw(estimator));
    }
}

/// One simulated quantum gradient estimate of `loss` near `x`. Writes the
/// sampled point to `z_out` and the estimate to `grad_out` (both length
/// `n`; either may be NULL) and the parameters used to `params_out` (may be
/// NULL).
///
/// # Safety
/// `x` must hold `n` doubles; non-NULL outputs must be writable for their
/// stated lengths; `loss` must accept any finite point.
#[no_mangle]
pub unsafe extern "C" fn qoco_quantum_estimate(
    estimator: *const QocoQuantumEstimator,
    loss: QocoLossFn,
    user_data: *mut c_void,
    x: *const f64,
    n: usize,
    r: f64,
    r_prime: f64,
    seed: u64,
    z_out: *mut f64,
    grad_out: *mut f64,
    params_out: *mut QocoParams,
) -> QocoStatus {
    guard(|| {
        non_null(estimator, "estimator")?;
        let est = &(*estimator).inner;
        let x = slice(x, n, "x")?;
        let mut f = callback_oracle(loss, user_data, est.lipschitz)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = est.estimate(&mut f, x, r, r_prime, &mut rng).map_err(check)?;
        write_out(z_out, &e.z);
        write_out(grad_out, &e.grad);
        if !params_out.is_null() {
            let q = e.params;
            *params_out =
                QocoParams { beta: q.beta, b: q.b, c: q.c, amplitudes: q.amplitudes() as u64, error_bound: q.lemma1_bound() };
        }
        Ok(())
    })
}

/// Central-difference gradient estimate of `loss` near `x` (`2n` loss
/// evaluations). Writes `z_out` and `grad_out` (length `n`, may be NULL) and
/// the evaluation count to `queries_out` (may be NULL).
///
/// # Safety
/// As for `qoco_quantum_estimate`.
#[no_mangle]
pub unsafe extern "C" fn qoco_classical_estimate(
    loss: QocoLossFn,
    user_data: *mut c_void,
    x: *const f64,
    n: usize,
    r: f64,
    r_prime: f64,
    seed: u64,
    z_out: *mut f64,
    grad_out: *mut f64,
    queries_out: *mut u64,
) -> QocoStatus {
    guard(|| {
        let x = slice(x, n, "x")?;
        let mut f = callback_oracle(loss, user_data, 1.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = estimate_gradient_c(&mut f, x, r, r_prime, &mut rng).map_err(check)?;
        write_out(z_out, &e.z);
        write_out(grad_out, &e.grad);
        if !queries_out.is_null() {
            *queries_out = e.queries;
        }
        Ok(())
    })
}

/// Parses and validates an experiment from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qoco_experiment_from_json(json: *const c_char, out: *mut *mut QocoExperiment) -> QocoStatus {
    guard(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(QocoStatus::Config, "config is not valid UTF-8"))?;
        let inner = ExperimentConfig::from_json(text).and_then(|c| c.build()).map_err(check)?;
        *out = Box::into_raw(Box::new(QocoExperiment { inner }));
        Ok(())
    })
}

/// # Safety
/// `experiment` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qoco_experiment_free(experiment: *mut QocoExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

/// Dimension of the experiment's feasible set, or 0 for NULL.
///
/// # Safety
/// `experiment` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qoco_experiment_dim(experiment: *const QocoExperiment) -> usize {
    experiment.as_ref().map_or(0, |e| e.inner.set.dim())
}

/// Number of rounds, or 0 for NULL.
///
/// # Safety
/// `experiment` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qoco_experiment_horizon(experiment: *const QocoExperiment) -> usize {
    experiment.as_ref().map_or(0, |e| e.inner.schedule.horizon)
}

/// Plays one seeded game and evaluates it.
///
/// # Safety
/// `experiment` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qoco_experiment_run(
    experiment: *const QocoExperiment,
    seed: u64,
    out: *mut *mut QocoRun,
) -> QocoStatus {
    guard(|| {
        non_null(experiment, "experiment")?;
        non_null(out, "out")?;
        let result = run_one(&(*experiment).inner, seed).map_err(check)?;
        let csv = CString::new(csv::emit(&result.transcript)).expect("csv has no nul bytes");
        *out = Box::into_raw(Box::new(QocoRun { result, csv }));
        Ok(())
    })
}

/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qoco_run_free(run: *mut QocoRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qoco_run_summary(run: *const QocoRun, out: *mut QocoRunSummary) -> QocoStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(out, "out")?;
        let r = &(*run).result;
        *out = QocoRunSummary {
            regret: r.report.regret,
            bound: r.report.bound_value,
            comparator_objective: r.report.comparator_objective,
            bound_satisfied: r.report.bound_satisfied,
            comparator_converged: r.report.comparator_converged,
            lemma_exceedances: r.report.lemma_exceedances as u64,
            total_queries: r.transcript.total_queries,
            rounds: r.transcript.rounds.len() as u64,
            dim: r.transcript.dim() as u64,
        };
        Ok(())
    })
}

/// Copies the played points, row-major `rounds x dim`, into `out`, which
/// must hold `len` doubles.
///
/// # Safety
/// `run` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qoco_run_decisions(run: *const QocoRun, out: *mut f64, len: usize) -> QocoStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(out, "out")?;
        let t = &(*run).result.transcript;
        let need = t.rounds.len() * t.dim();
        if len < need {
            return Err(fail(QocoStatus::InvalidArgument, format!("buffer holds {len} doubles, need {need}")));
        }
        let flat: Vec<f64> = t.rounds.iter().flat_map(|r| r.x.iter().copied()).collect();
        write_out(out, &flat);
        Ok(())
    })
}

/// The transcript CSV. The string is owned by the run and freed with it.
///
/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qoco_run_transcript_csv(run: *const QocoRun) -> *const c_char {
    run.as_ref().map_or(ptr::null(), |r| r.csv.as_ptr())
}
