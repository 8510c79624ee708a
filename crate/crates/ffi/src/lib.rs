//! C ABI over `fuzzy_resum`.
//!
//! Objects are handed out as opaque pointers and released with the matching
//! `fr_*_free`. Every fallible call returns an [`FrStatus`]; on failure the
//! message is available from [`fr_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fuzzy_resum::fourier::{abel_poisson, FourierError, FuzzyPeriodicFunction};
use fuzzy_resum::harness::series_from_text;
use fuzzy_resum::methods::{halving_schedule, Accel, Extrapolate, MethodError, MethodSpec, TransformOptions};
use fuzzy_resum::tauberian::{classify, TauberianClass};
use fuzzy_resum::{phi_limit, AlphaGrid, FuzzyNumber, FuzzySeries, LimitOptions, PhiMethod, Status, SummationResult};

/// Return code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Numeric = 4,
    NotAvailable = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrSumStatus {
    Converged = 0,
    Stalled = 1,
    KernelInvalid = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrTauberianClass {
    Vanishing = 0,
    Bounded = 1,
    Unbounded = 2,
    Inconclusive = 3,
}

/// Fuzzy number on an α-grid.
pub struct FrFuzzy(FuzzyNumber);
/// Lazily evaluated series of fuzzy numbers.
pub struct FrSeries(FuzzySeries);
/// Summation method with its kernel.
pub struct FrMethod(PhiMethod);
/// Outcome of [`fr_phi_limit`].
pub struct FrResult(SummationResult);

/// Options for [`fr_phi_limit`]. Start from [`fr_sum_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FrSumOptions {
    pub s_max: f64,
    pub s_steps: usize,
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub n_max: usize,
    pub euler_accel: bool,
    pub linear_extrapolation: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(FrStatus, String);

impl Fail {
    fn arg(msg: impl ToString) -> Self {
        Fail(FrStatus::InvalidArgument, msg.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FrStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside fuzzy-resum".into());
            FrStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(FrStatus::NullPointer, "null string".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(FrStatus::InvalidUtf8, e.to_string()))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(FrStatus::NullPointer, format!("null {what}")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(FrStatus::NullPointer, "null output pointer".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn drop_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn grid(levels: usize) -> Result<AlphaGrid, Fail> {
    AlphaGrid::uniform(levels).map_err(Fail::arg)
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Triangular number `(a, b, c)` on `levels` equally spaced α-levels.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fr_fuzzy_triangular(
    a: f64,
    b: f64,
    c: f64,
    levels: usize,
    out: *mut *mut FrFuzzy,
) -> FrStatus {
    guard(|| {
        let u = FuzzyNumber::triangular_on(&grid(levels)?, a, b, c).map_err(Fail::arg)?;
        put(out, FrFuzzy(u))
    })
}

/// Builds a number from `len` α-levels with lower and upper endpoints.
///
/// # Safety
/// The three arrays must hold `len` values each.
#[no_mangle]
pub unsafe extern "C" fn fr_fuzzy_from_levels(
    alphas: *const f64,
    lower: *const f64,
    upper: *const f64,
    len: usize,
    out: *mut *mut FrFuzzy,
) -> FrStatus {
    guard(|| {
        if alphas.is_null() || lower.is_null() || upper.is_null() {
            return Err(Fail(FrStatus::NullPointer, "null level array".into()));
        }
        let v = |p: *const f64| std::slice::from_raw_parts(p, len).to_vec();
        let u = FuzzyNumber::from_levels(v(alphas), v(lower), v(upper)).map_err(Fail::arg)?;
        put(out, FrFuzzy(u))
    })
}

/// Number of α-levels.
///
/// # Safety
/// `u` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fr_fuzzy_levels(u: *const FrFuzzy) -> usize {
    u.as_ref().map_or(0, |u| u.0.levels())
}

/// Copies α-levels, lower and upper endpoints into caller buffers of
/// length `len`, which must be at least [`fr_fuzzy_levels`]. Any buffer may
/// be null to skip it.
///
/// # Safety
/// Non-null buffers must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fr_fuzzy_copy(
    u: *const FrFuzzy,
    alphas: *mut f64,
    lower: *mut f64,
    upper: *mut f64,
    len: usize,
) -> FrStatus {
    guard(|| {
        let u = &get(u, "fuzzy number")?.0;
        if len < u.levels() {
            return Err(Fail::arg(format!("buffer holds {len} values, need {}", u.levels())));
        }
        for (dst, src) in [(alphas, u.alphas()), (lower, u.lower()), (upper, u.upper())] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
            }
        }
        Ok(())
    })
}

/// `D(u, v)`, the supremum over α of the Hausdorff distance between cuts.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_fuzzy_distance(u: *const FrFuzzy, v: *const FrFuzzy, out: *mut f64) -> FrStatus {
    guard(|| {
        let d = get(u, "fuzzy number")?.0.distance(&get(v, "fuzzy number")?.0);
        *out.as_mut()
            .ok_or(Fail(FrStatus::NullPointer, "null output pointer".into()))? = d;
        Ok(())
    })
}

/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_fuzzy_add(u: *const FrFuzzy, v: *const FrFuzzy, out: *mut *mut FrFuzzy) -> FrStatus {
    guard(|| {
        let w = get(u, "fuzzy number")?.0.add(&get(v, "fuzzy number")?.0);
        put(out, FrFuzzy(w))
    })
}

/// # Safety
/// `u` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_fuzzy_scale(u: *const FrFuzzy, k: f64, out: *mut *mut FrFuzzy) -> FrStatus {
    guard(|| {
        if !k.is_finite() {
            return Err(Fail::arg("scale factor is not finite"));
        }
        let w = get(u, "fuzzy number")?.0.scale(k);
        put(out, FrFuzzy(w))
    })
}

/// # Safety
/// `u` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fr_fuzzy_free(u: *mut FrFuzzy) {
    drop_handle(u)
}

/// Parses a series from `preset:NAME`, inline JSON, or a JSON file path.
/// `q` is the ratio of the geometric preset; pass NaN for the default.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_series_parse(
    spec: *const c_char,
    levels: usize,
    q: f64,
    out: *mut *mut FrSeries,
) -> FrStatus {
    guard(|| {
        let q = (!q.is_nan()).then_some(q);
        let s = series_from_text(text(spec)?, &grid(levels)?, q).map_err(Fail::arg)?;
        put(out, FrSeries(s))
    })
}

/// `s_n = u_0 + … + u_n`.
///
/// # Safety
/// `series` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_series_partial_sum(series: *const FrSeries, n: usize, out: *mut *mut FrFuzzy) -> FrStatus {
    guard(|| {
        let s = get(series, "series")?
            .0
            .partial_sum(n)
            .map_err(|e| Fail(FrStatus::Numeric, e.to_string()))?;
        put(out, FrFuzzy(s))
    })
}

/// # Safety
/// `series` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fr_series_free(series: *mut FrSeries) {
    drop_handle(series)
}

/// Parses `abel`, `mittag-leffler`, `dirichlet:<lambda>`, `factorial:<lambda>`
/// or a JSON method object. With `relaxed` the kernel is not validated
/// before summing.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_method_parse(spec: *const c_char, relaxed: bool, out: *mut *mut FrMethod) -> FrStatus {
    guard(|| {
        let m = MethodSpec::parse(text(spec)?)
            .and_then(|m| m.with_relaxed(relaxed).build())
            .map_err(Fail::arg)?;
        put(out, FrMethod(m))
    })
}

/// # Safety
/// `method` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fr_method_free(method: *mut FrMethod) {
    drop_handle(method)
}

#[no_mangle]
pub extern "C" fn fr_sum_options_default() -> FrSumOptions {
    let d = LimitOptions::default();
    FrSumOptions {
        s_max: d.schedule[0],
        s_steps: d.schedule.len(),
        outer_tol: d.outer_tol,
        inner_tol: d.inner.inner_tol,
        n_max: d.inner.n_max,
        euler_accel: d.inner.accel == Accel::Euler,
        linear_extrapolation: d.extrapolate == Extrapolate::Linear,
    }
}

fn limit_options(o: &FrSumOptions) -> Result<LimitOptions, Fail> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Fail::arg(format!("{name} must be positive, got {v}")))
        }
    };
    if o.s_steps == 0 || o.n_max == 0 {
        return Err(Fail::arg("s_steps and n_max must be >= 1"));
    }
    Ok(LimitOptions {
        schedule: halving_schedule(positive("s_max", o.s_max)?, o.s_steps),
        outer_tol: positive("outer_tol", o.outer_tol)?,
        inner: TransformOptions {
            inner_tol: positive("inner_tol", o.inner_tol)?,
            n_max: o.n_max,
            accel: if o.euler_accel { Accel::Euler } else { Accel::None },
        },
        extrapolate: if o.linear_extrapolation {
            Extrapolate::Linear
        } else {
            Extrapolate::None
        },
        ..LimitOptions::default()
    })
}

/// Drives `s → 0⁺`. A stalled run or an invalid kernel still yields a
/// result; check it with [`fr_result_status`].
///
/// # Safety
/// Handles must be live; `options` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn fr_phi_limit(
    series: *const FrSeries,
    method: *const FrMethod,
    options: *const FrSumOptions,
    out: *mut *mut FrResult,
) -> FrStatus {
    guard(|| {
        let opts = match options.as_ref() {
            Some(o) => limit_options(o)?,
            None => LimitOptions::default(),
        };
        let r = phi_limit(&get(series, "series")?.0, &get(method, "method")?.0, &opts).map_err(|e| {
            let code = match e {
                MethodError::InnerNotConverged { .. } | MethodError::Repair(_) => FrStatus::Numeric,
                _ => FrStatus::InvalidArgument,
            };
            Fail(code, e.to_string())
        })?;
        put(out, FrResult(r))
    })
}

/// # Safety
/// `result` must be live.
#[no_mangle]
pub unsafe extern "C" fn fr_result_status(result: *const FrResult) -> FrSumStatus {
    match result.as_ref().map(|r| r.0.status) {
        Some(Status::Converged) => FrSumStatus::Converged,
        Some(Status::Stalled) | None => FrSumStatus::Stalled,
        Some(Status::KernelInvalid) => FrSumStatus::KernelInvalid,
    }
}

/// Copies out the limit; `NotAvailable` when the run produced none.
///
/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_result_limit(result: *const FrResult, out: *mut *mut FrFuzzy) -> FrStatus {
    guard(|| {
        let r = &get(result, "result")?.0;
        let lim = r
            .limit
            .clone()
            .ok_or(Fail(FrStatus::NotAvailable, "run produced no limit".into()))?;
        put(out, FrFuzzy(lim))
    })
}

/// The full result as JSON; free with [`fr_string_free`].
///
/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_result_json(result: *const FrResult, out: *mut *mut c_char) -> FrStatus {
    guard(|| {
        let json =
            serde_json::to_string(&get(result, "result")?.0).map_err(|e| Fail(FrStatus::Numeric, e.to_string()))?;
        if out.is_null() {
            return Err(Fail(FrStatus::NullPointer, "null output pointer".into()));
        }
        *out = CString::new(json).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `result` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fr_result_free(result: *mut FrResult) {
    drop_handle(result)
}

/// Abel-Poisson mean `P_r(f; x)` of a preset periodic function
/// (`smooth`, `constant`, `cos`, `sin`, `square`).
///
/// # Safety
/// `name` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_abel_poisson_preset(
    name: *const c_char,
    r: f64,
    x: f64,
    sample_count: usize,
    levels: usize,
    out: *mut *mut FrFuzzy,
) -> FrStatus {
    guard(|| {
        let numeric = |e: FourierError| match e {
            FourierError::KernelUnderResolved { .. } => Fail(FrStatus::Numeric, e.to_string()),
            other => Fail::arg(other),
        };
        let f = FuzzyPeriodicFunction::preset(text(name)?, &grid(levels)?)
            .and_then(|f| f.with_sample_count(sample_count))
            .map_err(numeric)?;
        let p = abel_poisson(&f, r, x).map_err(numeric)?;
        put(out, FrFuzzy(p))
    })
}

/// Classifies `τ_n` for `n ≤ n_max`. `slope` receives the fitted log-log
/// slope, or NaN when there is none.
///
/// # Safety
/// Handles must be live and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn fr_tauberian_classify(
    series: *const FrSeries,
    method: *const FrMethod,
    n_max: usize,
    class: *mut FrTauberianClass,
    slope: *mut f64,
) -> FrStatus {
    guard(|| {
        let rep = classify(&get(series, "series")?.0, &get(method, "method")?.0, n_max).map_err(Fail::arg)?;
        if class.is_null() || slope.is_null() {
            return Err(Fail(FrStatus::NullPointer, "null output pointer".into()));
        }
        *class = match rep.class {
            TauberianClass::Vanishing => FrTauberianClass::Vanishing,
            TauberianClass::Bounded => FrTauberianClass::Bounded,
            TauberianClass::Unbounded => FrTauberianClass::Unbounded,
            TauberianClass::Inconclusive => FrTauberianClass::Inconclusive,
        };
        *slope = rep.slope.unwrap_or(f64::NAN);
        Ok(())
    })
}
