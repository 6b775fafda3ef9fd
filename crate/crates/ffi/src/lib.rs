//! C ABI for `stable-mce`.
//!
//! Every fallible function returns an [`SmceStatus`] code; on failure the
//! message is available from [`smce_last_error`] on the same thread. Models
//! are opaque handles created by [`smce_model_new`] and released with
//! [`smce_model_free`]. Arrays are passed as pointer plus length.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use stable_mce::estimator::{build_grid, EstimateOptions, WeightSpec};
use stable_mce::rng::rng_from_seed;
use stable_mce::stable_sim::Simulator;
use stable_mce::{empirical_cf, estimate, Error, FamilyId, KernelModel, ParameterPoint, ShiftNorm, SimConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Config = 4,
    Numeric = 5,
    Unsupported = 6,
    NotIdentifiable = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for SmceStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) | Error::Precondition(_) | Error::Model(_) => SmceStatus::Domain,
            Error::Argument(_) => SmceStatus::InvalidArgument,
            Error::Config(_) => SmceStatus::Config,
            Error::Numeric(_) => SmceStatus::Numeric,
            Error::Unsupported(_) => SmceStatus::Unsupported,
            Error::NotIdentifiable(_) => SmceStatus::NotIdentifiable,
            Error::Io(_) => SmceStatus::Io,
        }
    }
}

/// Opaque kernel model handle.
pub struct SmceModel {
    model: KernelModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> SmceStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmceStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            SmceStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            SmceStatus::from(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SmceStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(ptr: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a, T>(ptr: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn model_ref<'a>(model: *const SmceModel) -> Result<&'a KernelModel, Fail> {
    model.as_ref().map(|m| &m.model).ok_or(Fail::Null("model"))
}

fn point(model: &KernelModel, xi: &[f64]) -> Result<ParameterPoint, Fail> {
    if xi.len() != model.n_params() {
        return Err(Error::Argument(format!("{} needs {} parameters, got {}", model.family, model.n_params(), xi.len())).into());
    }
    Ok(ParameterPoint::from_slice(xi))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn smce_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn smce_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a model for the family id (`ou`, `lfsm`, `periodic-ou`,
/// `modulated-ou`, `gen-modulated-ou`, `carma21`). `lfsm_order` selects the
/// increment order for `lfsm`; pass 0 for the default.
///
/// # Safety
/// `family` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn smce_model_new(family: *const c_char, lfsm_order: u32, out: *mut *mut SmceModel) -> SmceStatus {
    guard(|| {
        if family.is_null() {
            return Err(Fail::Null("family"));
        }
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let id = CStr::from_ptr(family)
            .to_str()
            .map_err(|_| Error::Argument("family id is not UTF-8".into()))?;
        let f: FamilyId = id.parse()?;
        let model = match (f, lfsm_order) {
            (_, 0) => KernelModel::new(f),
            (FamilyId::LfsmInc, k) => KernelModel::lfsm(k)?,
            _ => return Err(Error::Argument("lfsm_order only applies to lfsm".into()).into()),
        };
        *out = Box::into_raw(Box::new(SmceModel { model }));
        Ok(())
    })
}

/// Releases a model handle; null is ignored.
///
/// # Safety
/// `model` must come from [`smce_model_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn smce_model_free(model: *mut SmceModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Length of the parameter vector `(beta, theta...)`, 0 for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smce_model_param_count(model: *const SmceModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.n_params())
}

/// Joint characteristic function at `u` (length `m`).
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn smce_theoretical_cf(
    model: *const SmceModel,
    xi: *const f64,
    n_xi: usize,
    u: *const f64,
    m: usize,
    out: *mut f64,
) -> SmceStatus {
    guard(|| {
        let model = model_ref(model)?;
        let p = point(model, input(xi, n_xi, "xi")?)?;
        let u = input(u, m, "u")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let norm = ShiftNorm::window(model, &p, m, stable_mce::NormMethod::Auto)?;
        *out = (-norm.norm(u)?).exp();
        Ok(())
    })
}

/// Empirical characteristic function of `values` at `u` (length `m`).
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn smce_empirical_cf(values: *const f64, n: usize, u: *const f64, m: usize, out: *mut f64) -> SmceStatus {
    guard(|| {
        let values = input(values, n, "values")?;
        let u = input(u, m, "u")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = empirical_cf(values, u)?;
        Ok(())
    })
}

/// Simulates `X_1..X_n` into `out` with the default grid and truncation.
///
/// # Safety
/// `xi` must hold `n_xi` values and `out` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn smce_simulate(
    model: *const SmceModel,
    xi: *const f64,
    n_xi: usize,
    n: usize,
    seed: u64,
    out: *mut f64,
) -> SmceStatus {
    guard(|| {
        let model = model_ref(model)?;
        let p = point(model, input(xi, n_xi, "xi")?)?;
        let out = output(out, n, "out")?;
        let sim = Simulator::new(model, &p, &SimConfig::with_seed(seed))?;
        let path = sim.simulate(n, &mut rng_from_seed(seed))?;
        out.copy_from_slice(&path.values);
        Ok(())
    })
}

/// Estimate returned by [`smce_estimate`] besides the parameter vector.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SmceFit {
    pub contrast: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimal contrast fit on an `m`-dimensional grid with `nodes_per_dim`
/// Gauss–Laguerre nodes and weight width `nu`. `free` may be null to
/// estimate every coordinate; otherwise nonzero entries are estimated and
/// the rest stay at `start`. Writes `n_params` values to `xi_out`.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths; `free` is null or
/// holds `n_params` bytes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn smce_estimate(
    model: *const SmceModel,
    values: *const f64,
    n: usize,
    m: usize,
    nodes_per_dim: usize,
    nu: f64,
    start: *const f64,
    free: *const u8,
    n_params: usize,
    xi_out: *mut f64,
    fit_out: *mut SmceFit,
) -> SmceStatus {
    guard(|| {
        let model = model_ref(model)?;
        let values = input(values, n, "values")?;
        let start = point(model, input(start, n_params, "start")?)?;
        let free = if free.is_null() { None } else { Some(input(free, n_params, "free")?.iter().map(|&b| b != 0).collect()) };
        let xi_out = output(xi_out, n_params, "xi_out")?;
        let grid = build_grid(m, nodes_per_dim, &WeightSpec::new(nu, m)?)?;
        let opts = EstimateOptions { free, ..Default::default() };
        let r = estimate(values, model, &grid, &start, &opts)?;
        xi_out.copy_from_slice(&r.xi_hat.to_vec());
        if let Some(f) = fit_out.as_mut() {
            *f = SmceFit { contrast: r.contrast_value, iterations: r.iterations, evaluations: r.evaluations, converged: r.converged };
        }
        Ok(())
    })
}
