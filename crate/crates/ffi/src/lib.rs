//! C ABI for `yosida-core`.
//!
//! Objects are opaque handles created by `yosida_*_new`/`*_load` functions
//! and released by the matching `*_free`. Every fallible call returns a
//! [`YosidaStatus`]; on failure the message is available from
//! [`yosida_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use yosida_core::homotopy::{annulus_search, ContinuationTrace, InclusionProblem};
use yosida_core::spec::ProblemFile;
use yosida_core::{Error, Gauge, MonotoneOp, PVector};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YosidaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonConvergence = 3,
    Unsupported = 4,
    Uncertified = 5,
    Validation = 6,
    SearchFailure = 7,
    Io = 8,
    Panic = 9,
}

/// A maximal monotone operator on `R^n`.
pub struct YosidaOperator(MonotoneOp);

/// An inclusion problem loaded from a TOML problem file.
pub struct YosidaProblem {
    file: ProblemFile,
    problem: InclusionProblem,
}

/// Result of an annulus search.
pub struct YosidaTrace(ContinuationTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> YosidaStatus {
    match e {
        Error::NonConvergence { .. } | Error::StepFailed { .. } => YosidaStatus::NonConvergence,
        Error::Unsupported(_) => YosidaStatus::Unsupported,
        Error::Uncertified(_) | Error::BoundaryDegenerate(_) | Error::DegenerateZero(_) => YosidaStatus::Uncertified,
        Error::Validation(_) | Error::Parse(_) | Error::MalformedMultifunction(_) => YosidaStatus::Validation,
        Error::SearchFailure(_) => YosidaStatus::SearchFailure,
        Error::Io(_) => YosidaStatus::Io,
        _ => YosidaStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F>(f: F) -> YosidaStatus
where
    F: FnOnce() -> Result<(), (YosidaStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => YosidaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            YosidaStatus::Panic
        }
    }
}

fn core<T>(r: yosida_core::Result<T>) -> Result<T, (YosidaStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (YosidaStatus, String) {
    (YosidaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], (YosidaStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], (YosidaStatus, String)> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), (YosidaStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn yosida_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// `x ↦ coeff·|x_i|^{gamma−1} x_i` on `R^dim`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn yosida_operator_power(
    gamma: f64,
    coeff: f64,
    dim: usize,
    out: *mut *mut YosidaOperator,
) -> YosidaStatus {
    guard(|| emit(out, YosidaOperator(core(MonotoneOp::power(gamma, coeff, dim))?)))
}

/// `x ↦ a x` on `R^dim`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn yosida_operator_scaled_identity(a: f64, dim: usize, out: *mut *mut YosidaOperator) -> YosidaStatus {
    guard(|| emit(out, YosidaOperator(core(MonotoneOp::scaled_identity(a, dim))?)))
}

/// Subdifferential of `weight·‖x‖₁` on `R^dim`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn yosida_operator_l1(weight: f64, dim: usize, out: *mut *mut YosidaOperator) -> YosidaStatus {
    guard(|| emit(out, YosidaOperator(core(MonotoneOp::l1(weight, dim))?)))
}

/// Normal cone of the box `[lo, hi]`; `lo` and `hi` hold `dim` entries each.
///
/// # Safety
/// `lo` and `hi` must point to `dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn yosida_operator_box_cone(
    lo: *const f64,
    hi: *const f64,
    dim: usize,
    out: *mut *mut YosidaOperator,
) -> YosidaStatus {
    guard(|| {
        let lo = slice(lo, dim, "lo")?.to_vec();
        let hi = slice(hi, dim, "hi")?.to_vec();
        emit(out, YosidaOperator(core(MonotoneOp::box_cone(lo, hi))?))
    })
}

/// Discrete p-Laplacian on the unit interval with `intervals` cells.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn yosida_operator_p_laplacian(intervals: usize, p: f64, out: *mut *mut YosidaOperator) -> YosidaStatus {
    guard(|| {
        let grid = core(yosida_core::operators::Grid::new_line(intervals))?;
        emit(out, YosidaOperator(core(MonotoneOp::p_laplacian(grid, p))?))
    })
}

/// Dimension of the operator's space, or 0 for a null handle.
///
/// # Safety
/// `op` must be null or a handle returned by this library.
#[no_mangle]
pub unsafe extern "C" fn yosida_operator_dim(op: *const YosidaOperator) -> usize {
    op.as_ref().map_or(0, |o| o.0.dim())
}

/// # Safety
/// `op` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn yosida_operator_free(op: *mut YosidaOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Resolvent `J_λ x` and Yosida approximant `A_λ x` for the gauge
/// `φ(r) = r^{p−1}`. Both outputs hold `n` doubles.
///
/// # Safety
/// `x`, `x_lambda` and `a_lambda` must point to `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn yosida_resolvent(
    op: *const YosidaOperator,
    p: f64,
    lambda: f64,
    x: *const f64,
    n: usize,
    tol: f64,
    x_lambda: *mut f64,
    a_lambda: *mut f64,
) -> YosidaStatus {
    guard(|| {
        let op = op.as_ref().ok_or_else(|| null("operator"))?;
        let x = slice(x, n, "x")?;
        let g = core(Gauge::new(p))?;
        let v = core(PVector::primal(x.to_vec(), p))?;
        let r = core(yosida_core::resolvent(&op.0, &g, lambda, &v, tol))?;
        slice_mut(x_lambda, n, "x_lambda")?.copy_from_slice(r.x_lambda.coords());
        slice_mut(a_lambda, n, "a_lambda")?.copy_from_slice(r.a_lambda.coords());
        Ok(())
    })
}

fn load_problem(text: &str) -> Result<YosidaProblem, (YosidaStatus, String)> {
    let file = core(ProblemFile::parse(text))?;
    let problem = core(file.inclusion_problem())?;
    Ok(YosidaProblem { file, problem })
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (YosidaStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| (YosidaStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Parses a TOML problem file held in memory.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn yosida_problem_from_toml(text: *const c_char, out: *mut *mut YosidaProblem) -> YosidaStatus {
    guard(|| {
        let p = load_problem(c_str(text, "text")?)?;
        emit(out, p)
    })
}

/// Reads and parses a TOML problem file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn yosida_problem_load(path: *const c_char, out: *mut *mut YosidaProblem) -> YosidaStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| (YosidaStatus::Io, e.to_string()))?;
        emit(out, load_problem(&text)?)
    })
}

/// # Safety
/// `problem` must be null or a handle returned by this library.
#[no_mangle]
pub unsafe extern "C" fn yosida_problem_dim(problem: *const YosidaProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.problem.dim())
}

/// # Safety
/// `problem` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn yosida_problem_free(problem: *mut YosidaProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Degree certificates, annulus search and continuation with the file's
/// schedule and search settings.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn yosida_annulus_search(problem: *const YosidaProblem, out: *mut *mut YosidaTrace) -> YosidaStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let schedule = core(p.file.schedule_for(p.problem.gamma()))?;
        let cfg = core(p.file.multistart())?;
        let trace = core(annulus_search(&p.problem, &schedule, &cfg))?;
        emit(out, YosidaTrace(trace))
    })
}

/// Number of candidates in the trace, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a handle returned by this library.
#[no_mangle]
pub unsafe extern "C" fn yosida_trace_candidate_count(trace: *const YosidaTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.candidates.len())
}

/// Copies candidate `index` into `coords` (`n` doubles) and its `l^p` norm into `norm`.
///
/// # Safety
/// `trace` must be a live handle, `coords` must hold `n` doubles and `norm` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn yosida_trace_candidate(
    trace: *const YosidaTrace,
    index: usize,
    coords: *mut f64,
    n: usize,
    norm: *mut f64,
) -> YosidaStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let c = t
            .0
            .candidates
            .get(index)
            .ok_or_else(|| (YosidaStatus::InvalidArgument, format!("candidate {index} out of range")))?;
        if n != c.x.len() {
            return Err((YosidaStatus::InvalidArgument, format!("expected n = {}", c.x.len())));
        }
        slice_mut(coords, n, "coords")?.copy_from_slice(&c.x);
        if !norm.is_null() {
            *norm = c.norm;
        }
        Ok(())
    })
}

/// The trace as CSV in a newly allocated string, released with [`yosida_string_free`].
///
/// # Safety
/// `trace` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn yosida_trace_csv(trace: *const YosidaTrace, out: *mut *mut c_char) -> YosidaStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let csv = core(t.0.to_csv())?;
        *out = CString::new(csv).map_err(|e| (YosidaStatus::InvalidArgument, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn yosida_trace_free(trace: *mut YosidaTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn yosida_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
