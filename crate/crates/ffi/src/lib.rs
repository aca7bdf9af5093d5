//! C interface to `fairshare`.
//!
//! Handles are opaque and owned by the caller: every `fs_*_new`/`fs_*_compute`
//! has a matching `fs_*_free`. Functions return an [`FsStatus`]; on failure,
//! `fs_last_error()` describes the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fairshare::approx::{optimal_theta, Theta};
use fairshare::certify::check_plane_lower_bound;
use fairshare::lp::Mode;
use fairshare::model::{Instance, ShareKind, ShareVector};
use fairshare::num::{format_rational, from_f64, to_f64, Rational};
use fairshare::shares::{all_shares, DeltaSpec};
use fairshare::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Solver = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsShareKind {
    Prop = 0,
    Ccs = 1,
    Ef = 2,
    Efs = 3,
    EfsDelta = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsMode {
    Exact = 0,
    Float = 1,
}

/// Solver and EFS^Δ options. `delta_numer / delta_denom` and `samples` are
/// read only for `FsShareKind::EfsDelta`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FsOptions {
    pub mode: FsMode,
    pub tolerance: f64,
    pub delta_numer: i64,
    pub delta_denom: i64,
    pub samples: u32,
    pub seed: u64,
}

/// Opaque instance handle.
pub struct FsInstance(Instance);

/// Opaque share-vector handle.
pub struct FsShares(ShareVector);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(e: &Error) -> FsStatus {
    match e {
        Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => FsStatus::Parse,
        Error::Io(_) => FsStatus::Io,
        Error::Solver(_) | Error::MalformedLp(_) | Error::Validation(_) => FsStatus::Solver,
        _ => FsStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), FsStatus>) -> FsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            FsStatus::Panic
        }
    }
}

fn fail(e: Error) -> FsStatus {
    let status = status_of(&e);
    set_error(e.to_string());
    status
}

fn null(what: &str) -> FsStatus {
    set_error(format!("{what} is null"));
    FsStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, FsStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        FsStatus::InvalidArgument
    })
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, FsStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, FsStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

fn mode_of(options: &FsOptions) -> Mode {
    match options.mode {
        FsMode::Exact => Mode::Exact,
        FsMode::Float => Mode::Float { tolerance: options.tolerance },
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Defaults: exact mode, tolerance 1e-9, Δ = 1, 20 samples, seed 0.
#[no_mangle]
pub extern "C" fn fs_options_default() -> FsOptions {
    FsOptions {
        mode: FsMode::Exact,
        tolerance: Mode::DEFAULT_TOLERANCE,
        delta_numer: 1,
        delta_denom: 1,
        samples: 20,
        seed: 0,
    }
}

/// Builds an instance from `n * m` row-major values; each `f64` is taken exactly.
///
/// # Safety
/// `values` must point to `n * m` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_instance_new(n: usize, m: usize, values: *const f64, out: *mut *mut FsInstance) -> FsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if values.is_null() {
            return Err(null("values"));
        }
        if n == 0 || m == 0 {
            return Err(fail(Error::InvalidInstance("need at least one agent and one item".into())));
        }
        let len = n.checked_mul(m).ok_or_else(|| fail(Error::InvalidArgument("n * m overflows".into())))?;
        let flat = std::slice::from_raw_parts(values, len);
        let rows = flat
            .chunks(m)
            .map(|row| {
                row.iter()
                    .map(|&v| from_f64(v).ok_or_else(|| Error::InvalidInstance(format!("value {v} is not finite"))))
                    .collect()
            })
            .collect::<Result<Vec<Vec<Rational>>, Error>>()
            .map_err(fail)?;
        let inst = Instance::new(rows).map_err(fail)?;
        *out = Box::into_raw(Box::new(FsInstance(inst)));
        Ok(())
    })
}

/// Parses instance CSV text (header row, one row per agent).
///
/// # Safety
/// `csv` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_instance_from_csv(csv: *const c_char, out: *mut *mut FsInstance) -> FsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(csv, "csv")?;
        let inst = Instance::read_csv(text.as_bytes()).map_err(fail)?;
        *out = Box::into_raw(Box::new(FsInstance(inst)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_instance_load(path: *const c_char, out: *mut *mut FsInstance) -> FsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let inst = fairshare::forge::load_csv(path).map_err(fail)?;
        *out = Box::into_raw(Box::new(FsInstance(inst)));
        Ok(())
    })
}

/// # Safety
/// `inst` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fs_instance_free(inst: *mut FsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of agents, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_instance_agents(inst: *const FsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.n())
}

/// Number of items, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_instance_items(inst: *const FsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.m())
}

/// # Safety
/// `inst` must be a live handle, `options` null or readable (null means
/// defaults), `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fs_shares_compute(
    inst: *const FsInstance,
    kind: FsShareKind,
    options: *const FsOptions,
    out: *mut *mut FsShares,
) -> FsStatus {
    guard(|| {
        let inst = &handle(inst, "inst")?.0;
        let out = out_arg(out, "out")?;
        let options = options.as_ref().copied().unwrap_or_else(|| fs_options_default());
        let kind = match kind {
            FsShareKind::Prop => ShareKind::Prop,
            FsShareKind::Ccs => ShareKind::Ccs,
            FsShareKind::Ef => ShareKind::Ef,
            FsShareKind::Efs => ShareKind::Efs,
            FsShareKind::EfsDelta => ShareKind::EfsDelta,
        };
        let spec = if kind == ShareKind::EfsDelta {
            if options.delta_denom <= 0 {
                return Err(fail(Error::InvalidArgument("delta_denom must be positive".into())));
            }
            let delta = Rational::new(options.delta_numer.into(), options.delta_denom.into());
            Some(DeltaSpec::new(delta, options.samples as usize, options.seed).map_err(fail)?)
        } else {
            None
        };
        let shares = all_shares(inst, kind, spec.as_ref(), mode_of(&options)).map_err(fail)?;
        *out = Box::into_raw(Box::new(FsShares(shares)));
        Ok(())
    })
}

/// # Safety
/// `shares` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_shares_free(shares: *mut FsShares) {
    if !shares.is_null() {
        drop(Box::from_raw(shares));
    }
}

/// # Safety
/// `shares` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_shares_len(shares: *const FsShares) -> usize {
    shares.as_ref().map_or(0, |s| s.0.values.len())
}

/// Share of `agent` rounded to the nearest double.
///
/// # Safety
/// `shares` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fs_shares_get(shares: *const FsShares, agent: usize, out: *mut f64) -> FsStatus {
    guard(|| {
        let shares = &handle(shares, "shares")?.0;
        let out = out_arg(out, "out")?;
        let value = shares.values.get(agent).ok_or_else(|| {
            fail(Error::AgentOutOfRange { index: agent, n: shares.values.len() })
        })?;
        *out = to_f64(value);
        Ok(())
    })
}

/// Exact share of `agent` as `"p/q"`; free it with `fs_string_free`.
///
/// # Safety
/// `shares` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fs_shares_get_exact(shares: *const FsShares, agent: usize, out: *mut *mut c_char) -> FsStatus {
    guard(|| {
        let shares = &handle(shares, "shares")?.0;
        let out = out_arg(out, "out")?;
        let value = shares.values.get(agent).ok_or_else(|| {
            fail(Error::AgentOutOfRange { index: agent, n: shares.values.len() })
        })?;
        *out = CString::new(format_rational(value)).expect("no nul").into_raw();
        Ok(())
    })
}

/// Optimal θ for `shares` on `inst`. `*unconstrained` is set when every
/// share is zero, in which case `*theta` is infinity.
///
/// # Safety
/// Handles must be live; `options` null or readable; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn fs_optimal_theta(
    inst: *const FsInstance,
    shares: *const FsShares,
    options: *const FsOptions,
    theta: *mut f64,
    unconstrained: *mut bool,
) -> FsStatus {
    guard(|| {
        let inst = &handle(inst, "inst")?.0;
        let shares = &handle(shares, "shares")?.0;
        let theta = out_arg(theta, "theta")?;
        let unconstrained = out_arg(unconstrained, "unconstrained")?;
        let options = options.as_ref().copied().unwrap_or_else(|| fs_options_default());
        let result = optimal_theta(inst, shares, mode_of(&options)).map_err(fail)?;
        match &result.theta {
            Theta::Value(t) => {
                *theta = to_f64(t);
                *unconstrained = false;
            }
            Theta::Unconstrained => {
                *theta = f64::INFINITY;
                *unconstrained = true;
            }
        }
        Ok(())
    })
}

/// Runs the projective-plane lower-bound check for prime `q`.
///
/// # Safety
/// `options` must be null or readable; `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn fs_certify_plane(q: usize, options: *const FsOptions, passed: *mut bool) -> FsStatus {
    guard(|| {
        let passed = out_arg(passed, "passed")?;
        let options = options.as_ref().copied().unwrap_or_else(|| fs_options_default());
        *passed = check_plane_lower_bound(q, mode_of(&options)).map_err(fail)?.passed;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn fs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
