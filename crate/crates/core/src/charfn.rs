//! β-norms of shifted kernel combinations, joint characteristic functions
//! and the dependence quantities of the empirical characteristic function.
//!
//! For a window of length `m` the joint characteristic function of
//! `(X_1, …, X_m)` is `exp(-∫ |Σ_k u_k g(x + k)|^β dx)`, `k = 1..m`, so `u_1`
//! pairs with the oldest observation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{FamilyId, KernelModel, ParameterPoint};
use crate::quadrature::{gauss_legendre, integrate_adaptive, TanhSinh, Tolerance};

/// How `∫ |Σ_k u_k g(x + s_k)|^β dx` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum NormMethod {
    /// `Exact` where the family allows it, `Table` otherwise.
    #[default]
    Auto,
    /// Cell-wise geometric summation; OU and periodic OU only.
    Exact,
    /// Fixed composite rule with the kernel tabulated once per parameter.
    Table,
    /// Global adaptive Gauss–Kronrod with kink breakpoints.
    Adaptive,
}

const TABLE_TAIL_TOL: f64 = 1e-13;
const ADAPTIVE_TAIL_TOL: f64 = 1e-13;
const TS_STEP: f64 = 0.25;
const TS_T_MIN: f64 = -5.0;
const TS_T_MAX: f64 = 3.0;
const TAIL_GL_NODES: usize = 12;

#[derive(Debug, Clone)]
enum Engine {
    Exact {
        shifts: Vec<i64>,
        ratio: f64,
        cell_mass: f64,
    },
    Table {
        weights: Vec<f64>,
        /// `g(x_p + s_k)` stored row-major by point.
        values: Vec<f64>,
    },
    Adaptive {
        model: KernelModel,
        xi: ParameterPoint,
        shifts: Vec<i64>,
        breakpoints: Vec<f64>,
    },
}

/// `u ↦ ∫ |Σ_k u_k g_ξ(x + s_k)|^β dx` for a fixed model, parameter and
/// shift list.
#[derive(Debug, Clone)]
pub struct ShiftNorm {
    beta: f64,
    n_shifts: usize,
    engine: Engine,
}

impl ShiftNorm {
    pub fn new(model: &KernelModel, xi: &ParameterPoint, shifts: &[i64], method: NormMethod) -> Result<Self> {
        model.check(xi)?;
        if shifts.is_empty() {
            return Err(Error::Argument("at least one shift is required".into()));
        }
        let method = match method {
            NormMethod::Auto if model.unit_shift_ratio(xi).is_some() => NormMethod::Exact,
            NormMethod::Auto => NormMethod::Table,
            m => m,
        };
        let engine = match method {
            NormMethod::Exact => {
                let ratio = model.unit_shift_ratio(xi).ok_or_else(|| {
                    Error::Unsupported(format!("{}: no exact β-norm evaluation", model.family))
                })?;
                Engine::Exact { shifts: shifts.to_vec(), ratio, cell_mass: model.unit_cell_mass(xi)? }
            }
            NormMethod::Table => build_table(model, xi, shifts)?,
            NormMethod::Adaptive => Engine::Adaptive {
                model: model.clone(),
                xi: xi.clone(),
                shifts: shifts.to_vec(),
                breakpoints: adaptive_breakpoints(model, xi, shifts)?,
            },
            NormMethod::Auto => unreachable!(),
        };
        Ok(Self { beta: xi.beta, n_shifts: shifts.len(), engine })
    }

    /// Shifts `1..=m` of a joint window.
    pub fn window(model: &KernelModel, xi: &ParameterPoint, m: usize, method: NormMethod) -> Result<Self> {
        let shifts: Vec<i64> = (1..=m as i64).collect();
        Self::new(model, xi, &shifts, method)
    }

    pub fn n_shifts(&self) -> usize {
        self.n_shifts
    }

    pub fn norm(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.n_shifts {
            return Err(Error::Argument(format!("expected {} frequencies, got {}", self.n_shifts, u.len())));
        }
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::Argument("frequencies must be finite".into()));
        }
        let v = self.norm_unchecked(u);
        if !v.is_finite() {
            return Err(Error::Model("β-norm of the kernel combination is not finite".into()));
        }
        Ok(v)
    }

    /// Hot path of the contrast: no length or finiteness checks.
    #[inline]
    pub fn norm_unchecked(&self, u: &[f64]) -> f64 {
        let b = self.beta;
        match &self.engine {
            Engine::Exact { shifts, ratio, cell_mass } => exact_norm(shifts, *ratio, *cell_mass, b, u),
            Engine::Table { weights, values } => {
                let n = self.n_shifts;
                let mut s = 0.0;
                for (p, w) in weights.iter().enumerate() {
                    let row = &values[p * n..(p + 1) * n];
                    let mut h = 0.0;
                    for k in 0..n {
                        h += u[k] * row[k];
                    }
                    if h != 0.0 {
                        s += w * h.abs().powf(b);
                    }
                }
                s
            }
            Engine::Adaptive { model, xi, shifts, breakpoints } => {
                if u.iter().all(|&v| v == 0.0) {
                    return 0.0;
                }
                let f = |x: f64| {
                    let base = x.floor();
                    let frac = x - base;
                    let mut h = 0.0;
                    for (k, &s) in shifts.iter().enumerate() {
                        if u[k] != 0.0 {
                            h += u[k] * model.eval_split(xi, base as i64 + s, frac);
                        }
                    }
                    h.abs().powf(b)
                };
                match integrate_adaptive(f, breakpoints, Tolerance { abs: 1e-12, rel: 1e-11, max_intervals: 50_000 }) {
                    Ok(r) => r.value,
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    /// `exp(-norm(u))`.
    #[inline]
    pub fn cf(&self, u: &[f64]) -> f64 {
        (-self.norm_unchecked(u)).exp()
    }
}

fn exact_norm(shifts: &[i64], r: f64, cell_mass: f64, b: f64, u: &[f64]) -> f64 {
    let s_min = *shifts.iter().min().unwrap();
    let s_max = *shifts.iter().max().unwrap();
    let mut total = 0.0;
    // Cells (c, c + 1) before every term is active.
    for c in -s_max..-s_min {
        let mut a = 0.0;
        for (k, &s) in shifts.iter().enumerate() {
            let e = c + s;
            if e >= 0 {
                a += u[k] * r.powi(e as i32);
            }
        }
        if a != 0.0 {
            total += a.abs().powf(b);
        }
    }
    let mut a = 0.0;
    for (k, &s) in shifts.iter().enumerate() {
        a += u[k] * r.powi((s - s_min) as i32);
    }
    if a != 0.0 {
        total += a.abs().powf(b) / (-(b * r.ln()).exp_m1());
    }
    total * cell_mass
}

fn build_table(model: &KernelModel, xi: &ParameterPoint, shifts: &[i64]) -> Result<Engine> {
    let s_min = *shifts.iter().min().unwrap();
    let s_max = *shifts.iter().max().unwrap();
    let start = -s_max;
    // The first unit piece past the last kink still has an endpoint singularity.
    let smooth_from = model.last_kink() - s_min + 1;
    let n = shifts.len();
    let mut weights = Vec::new();
    let mut values = Vec::new();
    let ts = TanhSinh::new(TS_STEP, TS_T_MIN, TS_T_MAX);
    for a in start..smooth_from {
        for i in 0..ts.len() {
            let (dl, dr) = (ts.from_left[i], ts.from_right[i]);
            weights.push(ts.weights[i]);
            for &s in shifts {
                let v = if dl <= 0.5 {
                    model.eval_split(xi, a + s, dl)
                } else {
                    model.eval_split(xi, a + s + 1, -dr)
                };
                values.push(v);
            }
        }
    }
    let growth = if model.family == FamilyId::LfsmInc { 4.0 } else { 2.0 };
    let (gx, gw) = gauss_legendre(TAIL_GL_NODES);
    let x0 = smooth_from as f64;
    let mut lo = x0;
    let mut width = 1.0;
    let mut pieces = 0;
    loop {
        let hi = lo + width;
        for (x, w) in gx.iter().zip(&gw) {
            let t = lo + 0.5 * width * (x + 1.0);
            weights.push(0.5 * width * w);
            for &s in shifts {
                values.push(model.eval_unchecked(xi, t + s as f64));
            }
        }
        pieces += 1;
        if model.tail_mass(xi, hi + s_min as f64)? <= TABLE_TAIL_TOL {
            break;
        }
        if pieces > 80 {
            return Err(Error::Numeric(format!("{}: kernel tail too heavy for tabulation", model.family)));
        }
        lo = hi;
        width = (hi - x0) * (growth - 1.0);
    }
    debug_assert_eq!(values.len(), weights.len() * n);
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::Model(format!("{}: kernel not finite on the quadrature table", model.family)));
    }
    Ok(Engine::Table { weights, values })
}

fn adaptive_breakpoints(model: &KernelModel, xi: &ParameterPoint, shifts: &[i64]) -> Result<Vec<f64>> {
    let s_min = *shifts.iter().min().unwrap();
    let s_max = *shifts.iter().max().unwrap();
    let last = model.last_kink() - s_min;
    let mut bp: Vec<f64> = (-s_max..=last).map(|a| a as f64).collect();
    let t = model.truncation_point(xi, ADAPTIVE_TAIL_TOL)? - s_min as f64;
    let mut x = last as f64 + 1.0;
    while x < t {
        bp.push(x);
        x = last as f64 + 2.0 * (x - last as f64);
    }
    bp.push(x);
    Ok(bp)
}

/// `‖Σ_{k=1}^m u_k g_ξ(· + k)‖_β^β` by adaptive quadrature with certified
/// tail truncation.
pub fn beta_norm(model: &KernelModel, xi: &ParameterPoint, u: &[f64]) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::Argument("empty frequency vector".into()));
    }
    ShiftNorm::window(model, xi, u.len(), NormMethod::Adaptive)?.norm(u)
}

/// Joint characteristic function of `(X_1, …, X_m)` at `u`.
pub fn theoretical_cf(model: &KernelModel, xi: &ParameterPoint, u: &[f64]) -> Result<f64> {
    Ok((-beta_norm(model, xi, u)?).exp())
}

/// `φ_n(u) = (1/n) Σ_{i=0}^{n-m} cos(Σ_{k=1}^m u_k X_{i+k})`.
pub fn empirical_cf(values: &[f64], u: &[f64]) -> Result<f64> {
    let m = u.len();
    let n = values.len();
    if m == 0 {
        return Err(Error::Argument("empty frequency vector".into()));
    }
    if n < m {
        return Err(Error::Argument(format!("path of length {n} is shorter than the window {m}")));
    }
    Ok(empirical_cf_unchecked(values, u))
}

#[inline]
pub(crate) fn empirical_cf_unchecked(values: &[f64], u: &[f64]) -> f64 {
    let m = u.len();
    let n = values.len();
    let mut s = 0.0;
    for w in values.windows(m) {
        let mut arg = 0.0;
        for k in 0..m {
            arg += u[k] * w[k];
        }
        s += arg.cos();
    }
    s / n as f64
}

/// Norm of the concatenated layout `Σ u_i g(i + x) + Σ v_i g(i + lag + x)`.
fn lagged_norm(model: &KernelModel, xi: &ParameterPoint, u: &[f64], v: &[f64], lag: i64, method: NormMethod) -> Result<f64> {
    let m = u.len() as i64;
    let mut shifts: Vec<i64> = (1..=m).collect();
    shifts.extend((1..=v.len() as i64).map(|i| i + lag));
    let mut w = u.to_vec();
    w.extend_from_slice(v);
    ShiftNorm::new(model, xi, &shifts, method)?.norm(&w)
}

fn window_norm(model: &KernelModel, xi: &ParameterPoint, u: &[f64], method: NormMethod) -> Result<f64> {
    ShiftNorm::window(model, xi, u.len(), method)?.norm(u)
}

/// Dependence measure `U(u, v) = φ(u, v; lag) - φ(u) φ(v)` between the
/// windows `Z_0 = (X_1..X_m)` and `Z_lag`.
pub fn dependence_u(
    model: &KernelModel,
    xi: &ParameterPoint,
    u: &[f64],
    v: &[f64],
    lag: i64,
    method: NormMethod,
) -> Result<f64> {
    if u.iter().all(|&x| x == 0.0) || v.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let joint = lagged_norm(model, xi, u, v, lag, method)?;
    let nu = window_norm(model, xi, u, method)?;
    let nv = window_norm(model, xi, v, method)?;
    Ok((-joint).exp() - (-nu - nv).exp())
}

/// `r_ℓ(u, v) = cov(cos⟨u, Z_0⟩, cos⟨v, Z_ℓ⟩) = (U(u, v) + U(u, -v)) / 2`.
pub fn r_ell(model: &KernelModel, xi: &ParameterPoint, u: &[f64], v: &[f64], lag: i64, method: NormMethod) -> Result<f64> {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    Ok(0.5 * (dependence_u(model, xi, u, v, lag, method)? + dependence_u(model, xi, u, &neg, lag, method)?))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovSeriesSpec {
    /// Largest `|ℓ|` included.
    pub lag_cut: usize,
    /// Stop early once both `|r_ℓ|` and `|r_{-ℓ}|` fall below this.
    pub negligible: f64,
    pub method: NormMethod,
}

impl Default for CovSeriesSpec {
    fn default() -> Self {
        Self { lag_cut: 100, negligible: 1e-17, method: NormMethod::Auto }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovSeries {
    pub value: f64,
    /// Estimated contribution of the lags beyond the last one summed.
    pub tail_estimate: f64,
    pub lags_used: usize,
}

/// Tail decay exponent `α` used for truncation estimates.
fn decay_alpha(model: &KernelModel, xi: &ParameterPoint) -> f64 {
    match model.family {
        FamilyId::LfsmInc => model.lfsm_order as f64 + 1.0 / xi.beta - xi.theta[0],
        _ => 3.0 / xi.beta,
    }
}

/// `Σ_{|ℓ| ≤ L} r_ℓ(u, v)`, the covariance of the limiting Gaussian field.
pub fn asymptotic_cov(model: &KernelModel, xi: &ParameterPoint, u: &[f64], v: &[f64], spec: CovSeriesSpec) -> Result<CovSeries> {
    model.check(xi)?;
    let ab = decay_alpha(model, xi) * xi.beta;
    if ab <= 2.0 {
        return Err(Error::Domain(format!("covariance series needs alpha*beta > 2, got {ab}")));
    }
    if u.len() != v.len() {
        return Err(Error::Argument("u and v must have the same length".into()));
    }
    let method = spec.method;
    let mut total = r_ell(model, xi, u, v, 0, method)?;
    let mut last = 0.0f64;
    let mut mid = f64::INFINITY;
    let mut lags_used = 0;
    for l in 1..=spec.lag_cut as i64 {
        let a = r_ell(model, xi, u, v, l, method)?;
        let b = r_ell(model, xi, v, u, l, method)?;
        total += a + b;
        lags_used = l as usize;
        last = a.abs().max(b.abs());
        if l as usize == spec.lag_cut / 2 {
            mid = last;
        }
        if !total.is_finite() {
            return Err(Error::Numeric("covariance series is not finite".into()));
        }
        if last < spec.negligible {
            break;
        }
    }
    if spec.lag_cut >= 8 && lags_used == spec.lag_cut && last > 1e-10 && last > mid {
        return Err(Error::Numeric("covariance series terms do not decay".into()));
    }
    let p = ab / 2.0;
    let tail = if lags_used == 0 { 0.0 } else { 2.0 * last * lags_used as f64 / (p - 1.0) };
    Ok(CovSeries { value: total, tail_estimate: tail, lags_used })
}

/// `ρ_i = ∫ |g(x) g(x + i)|^{β/2} dx` and `μ_i = ∫_{-m}^∞ |g(x + i)|^β dx`.
pub fn rho_mu(model: &KernelModel, xi: &ParameterPoint, i: i64, m: usize) -> Result<(f64, f64)> {
    model.check(xi)?;
    let b = xi.beta;
    let ia = i.abs();
    let last = model.last_kink();
    let t = model.truncation_point(xi, 1e-15)?;
    let mut bp: Vec<f64> = (0..=last).map(|j| j as f64).collect();
    let mut x = (last + 1) as f64;
    while x < t {
        bp.push(x);
        x *= 2.0;
    }
    bp.push(x);
    let tol = Tolerance { abs: 1e-14, rel: 1e-11, max_intervals: 20_000 };
    let rho = integrate_adaptive(
        |x| (model.eval_unchecked(xi, x) * model.eval_unchecked(xi, x + ia as f64)).abs().powf(0.5 * b),
        &bp,
        tol,
    )?
    .value;
    let lower = (i - m as i64).max(0) as f64;
    let mut bp2: Vec<f64> = vec![lower];
    bp2.extend(bp.iter().copied().filter(|&p| p > lower));
    if bp2.len() == 1 {
        bp2.extend(bp.iter().filter(|&&p| p > 0.0).map(|p| lower + p));
    }
    let mu = integrate_adaptive(|x| model.eval_unchecked(xi, x).abs().powf(b), &bp2, tol)?.value;
    Ok((rho, mu))
}
