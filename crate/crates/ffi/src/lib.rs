//! C ABI for the qsv verification toolkit.
//!
//! Objects are opaque heap handles created by `qsv_*_new`-style functions and
//! released with the matching `qsv_*_free`. Every fallible call returns a
//! [`QsvStatus`]; the message of the most recent failure on the calling
//! thread is available from [`qsv_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qsv::devicesim::DeviceSource;
use qsv::dpso::{build_strategy_operator, dpso_estimator_range, dpso_sample_complexity, dpso_verify, SamplingPlan};
use qsv::hypotest::{Decision, TestConfig};
use qsv::plm::{plm_sample_complexity, StrategyOperator};
use qsv::sop::{build_l, sop_sample_complexity};
use qsv::stabilizer::{StabilizerGroup, StabilizerTarget};
use qsv::target::{ghz, haar_random, DenseTarget, MpsTarget, TargetModel};
use qsv::Error;

/// Result codes shared by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    NotHermitian = 4,
    Construction = 5,
    ZeroGap = 6,
    ZeroBranch = 7,
    IncompatibleMeasurement = 8,
    SolverNonConvergence = 9,
    EigenNonConvergence = 10,
    Io = 11,
    Parse = 12,
    Utf8 = 13,
    Panic = 14,
}

impl From<&Error> for QsvStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Validation(_) => QsvStatus::InvalidArgument,
            Error::Capacity { .. } => QsvStatus::Capacity,
            Error::NotHermitian { .. } => QsvStatus::NotHermitian,
            Error::Construction(_) => QsvStatus::Construction,
            Error::ZeroGap => QsvStatus::ZeroGap,
            Error::ZeroBranch => QsvStatus::ZeroBranch,
            Error::IncompatibleMeasurement => QsvStatus::IncompatibleMeasurement,
            Error::SolverNonConvergence { .. } => QsvStatus::SolverNonConvergence,
            Error::EigenNonConvergence => QsvStatus::EigenNonConvergence,
            Error::Io(_) => QsvStatus::Io,
            Error::Parse(_) => QsvStatus::Parse,
        }
    }
}

/// A target state.
pub struct QsvTarget {
    inner: Box<dyn TargetModel>,
}

/// A distribution over measurement layouts.
pub struct QsvPlan {
    inner: SamplingPlan,
}

/// A strategy operator with its cached spectrum.
pub struct QsvStrategy {
    inner: StrategyOperator,
}

/// Outcome of a verification run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QsvVerdict {
    pub accepted: bool,
    pub trials: u64,
    pub mean: f64,
    pub threshold: f64,
    pub nu: f64,
    pub type_i_bound: f64,
    pub type_ii_bound: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), QsvStatus>) -> QsvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QsvStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("internal panic".into());
            QsvStatus::Panic
        }
    }
}

fn fail(e: Error) -> QsvStatus {
    let status = QsvStatus::from(&e);
    set_last_error(e.to_string());
    status
}

fn null(what: &str) -> QsvStatus {
    set_last_error(format!("{what} is null"));
    QsvStatus::NullPointer
}

/// # Safety
/// `p` must be null or point to a nul-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, QsvStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_last_error(format!("{what} is not valid UTF-8"));
        QsvStatus::Utf8
    })
}

/// # Safety
/// `out` must be null or valid for one write.
unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), QsvStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// # Safety
/// `p` must be null or a live handle of type `T`.
unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, QsvStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

fn target_handle(inner: impl TargetModel + 'static) -> QsvTarget {
    QsvTarget { inner: Box::new(inner) }
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn qsv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or null when none was
/// recorded. Release it with [`qsv_string_free`].
#[no_mangle]
pub extern "C" fn qsv_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qsv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `n`-qubit GHZ target with its stabilizer description.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_target_ghz(n: usize, out: *mut *mut QsvTarget) -> QsvStatus {
    guard(|| put(out, target_handle(ghz(n).map_err(fail)?.1)))
}

/// Haar-random `n`-qubit target drawn from `seed`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_target_haar(n: usize, seed: u64, out: *mut *mut QsvTarget) -> QsvStatus {
    guard(|| put(out, target_handle(haar_random(n, seed).map_err(fail)?)))
}

/// Dense target from a JSON array of `[re, im]` amplitudes.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_target_from_json(json: *const c_char, out: *mut *mut QsvTarget) -> QsvStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        put(out, target_handle(DenseTarget::from_json(text).map_err(fail)?))
    })
}

/// Matrix-product-state target from its JSON description.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_target_mps_from_json(json: *const c_char, out: *mut *mut QsvTarget) -> QsvStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        put(out, target_handle(MpsTarget::from_json(text).map_err(fail)?))
    })
}

/// Stabilizer target from whitespace- or comma-separated generators such as
/// `"+XXX +ZZI +ZIZ"`.
///
/// # Safety
/// `generators` must be a nul-terminated string; `out` must be valid for one
/// write.
#[no_mangle]
pub unsafe extern "C" fn qsv_target_stabilizer(generators: *const c_char, out: *mut *mut QsvTarget) -> QsvStatus {
    guard(|| {
        let text = read_str(generators, "generators")?;
        let gens: Vec<&str> = text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let group = StabilizerGroup::from_strings(&gens).map_err(fail)?;
        put(out, target_handle(StabilizerTarget::new(group).map_err(fail)?))
    })
}

/// # Safety
/// `target` must be null or a live target handle.
#[no_mangle]
pub unsafe extern "C" fn qsv_target_num_qubits(target: *const QsvTarget) -> usize {
    target.as_ref().map_or(0, |t| t.inner.num_qubits())
}

/// # Safety
/// `target` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qsv_target_free(target: *mut QsvTarget) {
    if !target.is_null() {
        drop(Box::from_raw(target));
    }
}

/// Uniform plan over every layout with `r` unmeasured qubits.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_plan_naive(n: usize, r: usize, out: *mut *mut QsvPlan) -> QsvStatus {
    guard(|| put(out, QsvPlan { inner: SamplingPlan::naive_uniform(n, r).map_err(fail)? }))
}

/// Plan uniform over GHZ equivalence classes.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_plan_ghz_classes(n: usize, r: usize, out: *mut *mut QsvPlan) -> QsvStatus {
    guard(|| put(out, QsvPlan { inner: SamplingPlan::ghz_class_uniform(n, r).map_err(fail)? }))
}

/// # Safety
/// `json` must be a nul-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_plan_from_json(json: *const c_char, out: *mut *mut QsvPlan) -> QsvStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        put(out, QsvPlan { inner: SamplingPlan::from_json(text).map_err(fail)? })
    })
}

/// JSON form of the plan; release it with [`qsv_string_free`]. Null when
/// `plan` is null.
///
/// # Safety
/// `plan` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn qsv_plan_to_json(plan: *const QsvPlan) -> *mut c_char {
    plan.as_ref().map_or(ptr::null_mut(), |p| {
        CString::new(p.inner.to_json()).map_or(ptr::null_mut(), CString::into_raw)
    })
}

/// # Safety
/// `plan` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qsv_plan_free(plan: *mut QsvPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Averaged partial-shadow-overlap operator of `plan` for `target`.
///
/// # Safety
/// `target` and `plan` must be live handles; `out` must be valid for one
/// write.
#[no_mangle]
pub unsafe extern "C" fn qsv_strategy_dpso(
    target: *const QsvTarget,
    plan: *const QsvPlan,
    out: *mut *mut QsvStrategy,
) -> QsvStatus {
    guard(|| {
        let t = get(target, "target")?;
        let p = get(plan, "plan")?;
        let s = build_strategy_operator(t.inner.as_ref(), &p.inner).map_err(fail)?;
        put(out, QsvStrategy { inner: s })
    })
}

/// Level-`level` shadow-overlap operator for `target`.
///
/// # Safety
/// `target` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_strategy_sop(target: *const QsvTarget, level: usize, out: *mut *mut QsvStrategy) -> QsvStatus {
    guard(|| {
        let t = get(target, "target")?;
        put(out, QsvStrategy { inner: build_l(t.inner.as_ref(), level).map_err(fail)? })
    })
}

/// Spectral gap `1 - λ₂`.
///
/// # Safety
/// `strategy` must be a live handle; `nu` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_strategy_gap(strategy: *const QsvStrategy, nu: *mut f64) -> QsvStatus {
    guard(|| {
        let s = get(strategy, "strategy")?;
        if nu.is_null() {
            return Err(null("nu"));
        }
        *nu = s.inner.gap().map_err(fail)?;
        Ok(())
    })
}

/// Copies the eigenvalues, largest first, into `values` (capacity `len`).
/// Returns the number of eigenvalues, which may exceed `len`.
///
/// # Safety
/// `strategy` must be null or a live handle; `values` must be null or valid
/// for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn qsv_strategy_eigenvalues(strategy: *const QsvStrategy, values: *mut f64, len: usize) -> usize {
    let Some(s) = strategy.as_ref() else {
        return 0;
    };
    let ev = s.inner.eigenvalues();
    if !values.is_null() {
        ptr::copy_nonoverlapping(ev.as_ptr(), values, ev.len().min(len));
    }
    ev.len()
}

/// # Safety
/// `strategy` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qsv_strategy_free(strategy: *mut QsvStrategy) {
    if !strategy.is_null() {
        drop(Box::from_raw(strategy));
    }
}

unsafe fn write_count(out: *mut u64, n: qsv::Result<u64>) -> Result<(), QsvStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = n.map_err(fail)?;
    Ok(())
}

/// Copies needed by the pass/fail protocol.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_plm_sample_complexity(epsilon: f64, delta: f64, nu: f64, out: *mut u64) -> QsvStatus {
    guard(|| write_count(out, plm_sample_complexity(epsilon, delta, nu)))
}

/// Copies needed by the level-`level` shadow-overlap protocol.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_sop_sample_complexity(
    level: usize,
    epsilon: f64,
    delta: f64,
    nu: f64,
    out: *mut u64,
) -> QsvStatus {
    guard(|| write_count(out, sop_sample_complexity(level, epsilon, delta, nu)))
}

/// Copies needed by the level-`r` partial-shadow-overlap protocol.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsv_dpso_sample_complexity(r: usize, epsilon: f64, delta: f64, nu: f64, out: *mut u64) -> QsvStatus {
    guard(|| write_count(out, dpso_sample_complexity(r, epsilon, delta, nu)))
}

/// Runs the partial-shadow-overlap protocol against a simulated device.
/// `device_infidelity = 0` emits the target exactly; a positive value emits
/// the worst case at that infidelity. `trials = 0` uses the sample
/// complexity.
///
/// # Safety
/// `target` and `plan` must be live handles; `verdict` must be valid for one
/// write.
#[no_mangle]
pub unsafe extern "C" fn qsv_dpso_verify(
    target: *const QsvTarget,
    plan: *const QsvPlan,
    epsilon: f64,
    delta: f64,
    device_infidelity: f64,
    trials: u64,
    seed: u64,
    verdict: *mut QsvVerdict,
) -> QsvStatus {
    guard(|| {
        let t = get(target, "target")?;
        let p = get(plan, "plan")?;
        if verdict.is_null() {
            return Err(null("verdict"));
        }
        let model = t.inner.as_ref();
        let omega = build_strategy_operator(model, &p.inner).map_err(fail)?;
        let nu = omega.gap().map_err(fail)?;
        let r = p.inner.level();
        let (a, b) = dpso_estimator_range(r, false);
        let cfg = TestConfig::new(epsilon, delta, a, b, nu).map_err(fail)?;
        let psi = model.to_dense().map_err(fail)?;
        let device = if device_infidelity == 0.0 {
            DeviceSource::exact(&psi)
        } else {
            DeviceSource::worst_case(&psi, &omega, device_infidelity).map_err(fail)?
        };
        let n = if trials == 0 { dpso_sample_complexity(r, epsilon, delta, nu).map_err(fail)? } else { trials };
        let report = dpso_verify(device.emit(), model, &p.inner, &cfg, n, seed).map_err(fail)?;
        *verdict = QsvVerdict {
            accepted: report.decision == Decision::Accept,
            trials: report.trials,
            mean: report.mean,
            threshold: report.threshold,
            nu,
            type_i_bound: report.type_i_bound,
            type_ii_bound: report.type_ii_bound,
        };
        Ok(())
    })
}
