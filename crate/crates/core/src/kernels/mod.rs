//! Parametric kernel families `g_ξ`, their admissible parameter sets and
//! envelope constants.

pub mod closed_form;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, Tolerance};
use crate::special::{incomplete_gamma, scaled_upper_gamma};

pub use closed_form::{
    carma_c, carma_covariation, modou_covariation, modou_scale_identity, ou_norm_closed_form,
    periodic_norm_closed_form,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyId {
    #[serde(rename = "ou")]
    Ou,
    #[serde(rename = "lfsm")]
    LfsmInc,
    #[serde(rename = "periodic-ou")]
    PeriodicOu,
    #[serde(rename = "modulated-ou")]
    ModulatedOu,
    #[serde(rename = "gen-modulated-ou")]
    GeneralizedModulatedOu,
    #[serde(rename = "carma21")]
    Carma21,
}

impl FamilyId {
    pub const ALL: [FamilyId; 6] = [
        FamilyId::Ou,
        FamilyId::LfsmInc,
        FamilyId::PeriodicOu,
        FamilyId::ModulatedOu,
        FamilyId::GeneralizedModulatedOu,
        FamilyId::Carma21,
    ];

    /// Registry id used by configuration files and the CLI.
    pub fn id(self) -> &'static str {
        match self {
            FamilyId::Ou => "ou",
            FamilyId::LfsmInc => "lfsm",
            FamilyId::PeriodicOu => "periodic-ou",
            FamilyId::ModulatedOu => "modulated-ou",
            FamilyId::GeneralizedModulatedOu => "gen-modulated-ou",
            FamilyId::Carma21 => "carma21",
        }
    }

    /// Names of the full parameter vector `(beta, theta...)`.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            FamilyId::Ou => &["beta", "lambda", "sigma"],
            FamilyId::LfsmInc => &["beta", "H", "sigma"],
            FamilyId::PeriodicOu | FamilyId::ModulatedOu => &["beta", "theta1", "theta2"],
            FamilyId::GeneralizedModulatedOu => &["beta", "lambda", "sigma"],
            FamilyId::Carma21 => &["beta", "theta", "lambda"],
        }
    }

    /// Dimension of `theta`.
    pub fn theta_dim(self) -> usize {
        self.param_names().len() - 1
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyId::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown family id '{s}'")))
    }
}

/// Joint parameter `ξ = (β, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub beta: f64,
    pub theta: Vec<f64>,
}

impl ParameterPoint {
    pub fn new(beta: f64, theta: impl Into<Vec<f64>>) -> Self {
        Self { beta, theta: theta.into() }
    }

    /// Builds a point from the flat vector `[beta, theta...]`.
    pub fn from_slice(v: &[f64]) -> Self {
        Self { beta: v[0], theta: v[1..].to_vec() }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + self.theta.len());
        v.push(self.beta);
        v.extend_from_slice(&self.theta);
        v
    }

    pub fn len(&self) -> usize {
        1 + self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> f64 {
        if i == 0 {
            self.beta
        } else {
            self.theta[i - 1]
        }
    }
}

/// The 1-periodic modulation `f` of the periodic OU family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PeriodicProfile {
    /// `f(x) = -(1 + sin 2πx) / 2`, takes values in `[-1, 0]`.
    #[default]
    Sine,
    /// `f ≡ 0`; reduces the family to OU with unit scale.
    Zero,
}

impl PeriodicProfile {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            PeriodicProfile::Sine => -0.5 * (1.0 + (2.0 * PI * x).sin()),
            PeriodicProfile::Zero => 0.0,
        }
    }

    /// `sup |f|`.
    pub fn bound(self) -> f64 {
        match self {
            PeriodicProfile::Sine => 1.0,
            PeriodicProfile::Zero => 0.0,
        }
    }
}

/// Constants `(K, κ, α)` of the power envelope
/// `|g(x)| ≤ K (x^κ 1_{(0,1)}(x) + x^{-α} 1_{[1,∞)}(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub k: f64,
    pub kappa: f64,
    pub alpha: f64,
}

impl Envelope {
    pub fn bound(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x < 1.0 {
            self.k * x.powf(self.kappa)
        } else {
            self.k * x.powf(-self.alpha)
        }
    }
}

/// A kernel family together with its fixed structural settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub family: FamilyId,
    /// Increment order of the LFSM family.
    pub lfsm_order: u32,
    pub profile: PeriodicProfile,
}

impl KernelModel {
    pub fn new(family: FamilyId) -> Self {
        Self { family, lfsm_order: 2, profile: PeriodicProfile::Sine }
    }

    pub fn lfsm(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Argument("LFSM increment order must be at least 1".into()));
        }
        Ok(Self { family: FamilyId::LfsmInc, lfsm_order: k, profile: PeriodicProfile::Sine })
    }

    pub fn periodic(profile: PeriodicProfile) -> Self {
        Self { family: FamilyId::PeriodicOu, lfsm_order: 2, profile }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Ok(Self::new(id.parse()?))
    }

    /// Number of free coordinates in `(β, θ)`.
    pub fn n_params(&self) -> usize {
        self.family.param_names().len()
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        self.family.param_names()
    }

    /// Checks that `xi` belongs to the admissible parameter set.
    pub fn check(&self, xi: &ParameterPoint) -> Result<()> {
        let d = self.family.theta_dim();
        if xi.theta.len() != d {
            return Err(Error::Domain(format!(
                "{} expects {} theta components, got {}",
                self.family,
                d,
                xi.theta.len()
            )));
        }
        let b = xi.beta;
        if !xi.to_vec().iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("parameters must be finite".into()));
        }
        let need = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Domain(format!("{}: {what} violated at {:?}", self.family, xi.to_vec())))
            }
        };
        match self.family {
            FamilyId::ModulatedOu | FamilyId::Carma21 => need(b > 1.0 && b < 2.0, "1 < beta < 2")?,
            _ => need(b > 0.0 && b < 2.0, "0 < beta < 2")?,
        }
        let t = &xi.theta;
        match self.family {
            FamilyId::Ou | FamilyId::GeneralizedModulatedOu => {
                need(t[0] > 0.0, "lambda > 0")?;
                need(t[1] > 0.0, "sigma > 0")
            }
            FamilyId::LfsmInc => {
                let k = self.lfsm_order as f64;
                need(t[0] > 0.0, "H > 0")?;
                need(t[0] < 1.0, "H < 1")?;
                need(t[0] < k - 1.0 / b, "H < k - 1/beta")?;
                need(t[1] > 0.0, "sigma > 0")
            }
            FamilyId::PeriodicOu | FamilyId::ModulatedOu => {
                need(t[0] > 0.0, "theta1 > 0")?;
                need(t[1] > 0.0, "theta2 > 0")
            }
            FamilyId::Carma21 => {
                need(t[0] > 0.0, "theta > 0")?;
                need(t[1] < 0.0, "lambda < 0")
            }
        }
    }

    pub fn is_admissible(&self, xi: &ParameterPoint) -> bool {
        self.check(xi).is_ok()
    }

    /// The LFSM continuous-path case `1/β < H < k - 1/β`.
    pub fn check_lfsm_continuous(&self, xi: &ParameterPoint) -> Result<()> {
        self.check(xi)?;
        let k = self.lfsm_order as f64;
        let (b, h) = (xi.beta, xi.theta[0]);
        if !(h - 1.0 / b > 0.0 && h < k - 1.0 / b) {
            return Err(Error::Domain(format!(
                "LFSM continuous case needs 0 < H - 1/beta and H < k - 1/beta (beta={b}, H={h}, k={k})"
            )));
        }
        Ok(())
    }

    /// Non-fatal warnings about the parameter point.
    pub fn diagnostics(&self, xi: &ParameterPoint) -> Vec<String> {
        let mut out = Vec::new();
        if self.family == FamilyId::PeriodicOu && (xi.beta - 1.0).abs() < 1e-12 {
            out.push("periodic OU: injectivity of the characteristic function is only known for beta != 1".into());
        }
        if self.family == FamilyId::LfsmInc && self.check_lfsm_continuous(xi).is_err() {
            out.push("LFSM parameters outside the continuous case H > 1/beta".into());
        }
        out
    }

    /// `g_ξ(x)`, zero for `x ≤ 0`. Does not re-check admissibility.
    #[inline]
    pub fn eval_unchecked(&self, xi: &ParameterPoint, x: f64) -> f64 {
        let base = x.floor();
        self.eval_split(xi, base as i64, x - base)
    }

    /// `g_ξ(base + frac)` where the split keeps the distance to the integer
    /// breakpoints of the LFSM kernel exact.
    #[inline]
    pub fn eval_split(&self, xi: &ParameterPoint, base: i64, frac: f64) -> f64 {
        let t = &xi.theta;
        if self.family == FamilyId::LfsmInc {
            let k = self.lfsm_order as i64;
            let eta = t[0] - 1.0 / xi.beta;
            let mut s = 0.0;
            let mut binom = 1.0;
            for j in 0..=k {
                let y = (base - j) as f64 + frac;
                if y > 0.0 {
                    let term = binom * y.powf(eta);
                    s += if j % 2 == 0 { term } else { -term };
                }
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            return t[1] * s;
        }
        let x = base as f64 + frac;
        if x <= 0.0 {
            return 0.0;
        }
        match self.family {
            FamilyId::Ou => t[1] * (-t[0] * x).exp(),
            FamilyId::PeriodicOu => (-t[0] * x - t[1] * self.profile.eval(x)).exp(),
            FamilyId::ModulatedOu => t[0] * x * (-t[1] * x).exp(),
            FamilyId::GeneralizedModulatedOu => x.powf(t[1]) * (-t[0] * x).exp(),
            FamilyId::Carma21 => (1.0 + t[0] * x) * (t[1] * x).exp(),
            FamilyId::LfsmInc => unreachable!(),
        }
    }

    /// Checked kernel evaluation.
    pub fn eval(&self, xi: &ParameterPoint, x: f64) -> Result<f64> {
        self.check(xi)?;
        Ok(self.eval_unchecked(xi, x))
    }

    /// Points where `g` is not smooth (relative to the kernel argument).
    pub fn kinks(&self) -> Vec<f64> {
        match self.family {
            FamilyId::LfsmInc => (0..=self.lfsm_order).map(|j| j as f64).collect(),
            _ => vec![0.0],
        }
    }

    /// Largest kink location.
    pub fn last_kink(&self) -> i64 {
        match self.family {
            FamilyId::LfsmInc => self.lfsm_order as i64,
            _ => 0,
        }
    }

    /// Ratio `r` with `g(x + 1) = r g(x)` for all `x > 0`, when it exists.
    pub fn unit_shift_ratio(&self, xi: &ParameterPoint) -> Option<f64> {
        match self.family {
            FamilyId::Ou | FamilyId::PeriodicOu => Some((-xi.theta[0]).exp()),
            _ => None,
        }
    }

    /// `∫_0^1 |g|^β`.
    pub fn unit_cell_mass(&self, xi: &ParameterPoint) -> Result<f64> {
        let b = xi.beta;
        match self.family {
            FamilyId::Ou => {
                let (l, s) = (xi.theta[0], xi.theta[1]);
                Ok(s.powf(b) * (-(-b * l).exp_m1()) / (b * l))
            }
            _ => {
                let r = integrate_adaptive(
                    |x| self.eval_unchecked(xi, x).abs().powf(b),
                    &[0.0, 1.0],
                    Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 2000 },
                )?;
                Ok(r.value)
            }
        }
    }

    /// Upper bound on the tail mass `∫_t^∞ |g|^β`. Returns `+∞` where no
    /// bound is available (LFSM for `t ≤ k`).
    pub fn tail_mass(&self, xi: &ParameterPoint, t: f64) -> Result<f64> {
        let b = xi.beta;
        let th = &xi.theta;
        let t0 = t.max(0.0);
        Ok(match self.family {
            FamilyId::Ou => th[1].powf(b) * (-b * th[0] * t0).exp() / (b * th[0]),
            FamilyId::PeriodicOu => {
                (b * th[1] * self.profile.bound()).exp() * (-b * th[0] * t0).exp() / (b * th[0])
            }
            FamilyId::ModulatedOu => {
                let rate = b * th[1];
                let g = if t0 > 0.0 { incomplete_gamma(b + 1.0, rate * t0)? } else { gamma(b + 1.0) };
                th[0].powf(b) * g / rate.powf(b + 1.0)
            }
            FamilyId::GeneralizedModulatedOu => {
                let rate = b * th[0];
                let a = th[1] * b + 1.0;
                let g = if t0 > 0.0 { incomplete_gamma(a, rate * t0)? } else { gamma(a) };
                g / rate.powf(a)
            }
            FamilyId::Carma21 => {
                let (theta, lambda) = (th[0], th[1]);
                let y = t0 + 1.0 / theta;
                (lambda * b * t0).exp()
                    * (1.0 + theta * t0).powf(b)
                    * y
                    * scaled_upper_gamma(b + 1.0, -lambda * b * y)?
            }
            FamilyId::LfsmInc => {
                let k = self.lfsm_order as f64;
                if t <= k {
                    return Ok(f64::INFINITY);
                }
                let eta = th[0] - 1.0 / b;
                let ab = (k - eta) * b;
                (th[1] * lfsm_falling_factorial(eta, self.lfsm_order).abs()).powf(b) * (t - k).powf(1.0 - ab)
                    / (ab - 1.0)
            }
        })
    }

    /// Smallest `T` in a doubling sequence with `tail_mass(T) ≤ tol`.
    pub fn truncation_point(&self, xi: &ParameterPoint, tol: f64) -> Result<f64> {
        let mut t = (self.last_kink() + 1) as f64;
        for _ in 0..200 {
            if self.tail_mass(xi, t)? <= tol {
                return Ok(t);
            }
            t *= 2.0;
            if t > 1e12 {
                break;
            }
        }
        Err(Error::Numeric(format!("{}: kernel tail does not reach {tol:e}", self.family)))
    }

    /// Envelope constants `(K, κ, α)`. `K` is the maximum of the envelope
    /// ratio over a dense logarithmic grid, inflated by 1%.
    pub fn envelope_constants(&self, xi: &ParameterPoint) -> Result<Envelope> {
        self.check(xi)?;
        let b = xi.beta;
        let (kappa, alpha) = match self.family {
            FamilyId::LfsmInc => {
                let eta = xi.theta[0] - 1.0 / b;
                if eta < 0.0 {
                    return Err(Error::Domain(format!(
                        "LFSM kernel with H - 1/beta = {eta} < 0 is unbounded at interior integers; no power envelope"
                    )));
                }
                (eta, self.lfsm_order as f64 - eta)
            }
            FamilyId::ModulatedOu => (1.0, 3.0 / b),
            FamilyId::GeneralizedModulatedOu => (xi.theta[1], 3.0 / b),
            _ => (0.0, 3.0 / b),
        };
        let unit = Envelope { k: 1.0, kappa, alpha };
        let mut kmax: f64 = 0.0;
        let n = 20_000;
        let (lo, hi) = (-8.0f64, 6.0f64);
        let mut probe = |x: f64| {
            let r = self.eval_unchecked(xi, x).abs() / unit.bound(x);
            if r.is_finite() {
                kmax = kmax.max(r);
            }
        };
        for i in 0..=n {
            probe(10f64.powf(lo + (hi - lo) * i as f64 / n as f64));
        }
        for j in 1..=(self.last_kink() + 1) {
            probe(j as f64);
        }
        if self.family == FamilyId::LfsmInc {
            kmax = kmax.max(xi.theta[1] * lfsm_falling_factorial(xi.theta[0] - 1.0 / b, self.lfsm_order).abs());
        }
        if !(kmax > 0.0) {
            return Err(Error::Model(format!("{}: kernel vanishes identically", self.family)));
        }
        Ok(Envelope { k: 1.01 * kmax, kappa, alpha })
    }

    /// Signed asymptotic constant `c` with `g(u) / (c u^{H - 1/β - k}) → 1`.
    pub fn lfsm_asymptotic_constant(&self, xi: &ParameterPoint) -> Result<f64> {
        if self.family != FamilyId::LfsmInc {
            return Err(Error::Unsupported("asymptotic constant is defined for the LFSM family only".into()));
        }
        self.check(xi)?;
        Ok(xi.theta[1] * lfsm_falling_factorial(xi.theta[0] - 1.0 / xi.beta, self.lfsm_order))
    }

    /// `[X_1, X_0]_β = ∫ g(s + 1) sign(g(s)) |g(s)|^{β-1} ds`.
    pub fn covariation(&self, xi: &ParameterPoint) -> Result<f64> {
        self.check(xi)?;
        let b = xi.beta;
        if b <= 1.0 {
            return Err(Error::Unsupported(format!("covariation needs beta > 1, got {b}")));
        }
        let t = self.truncation_point(xi, 1e-14)?;
        let mut bp: Vec<f64> = (0..=self.last_kink()).map(|j| j as f64).collect();
        let mut x = (self.last_kink() + 1) as f64;
        while x < t {
            bp.push(x);
            x *= 2.0;
        }
        bp.push(t.max(x));
        let r = integrate_adaptive(
            |s| {
                let g0 = self.eval_unchecked(xi, s);
                if g0 == 0.0 {
                    return 0.0;
                }
                self.eval_unchecked(xi, s + 1.0) * g0.signum() * g0.abs().powf(b - 1.0)
            },
            &bp,
            Tolerance { abs: 1e-13, rel: 1e-12, max_intervals: 20_000 },
        )?;
        Ok(r.value)
    }
}

/// `η (η - 1) ⋯ (η - k + 1)`.
fn lfsm_falling_factorial(eta: f64, k: u32) -> f64 {
    (0..k).map(|i| eta - i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn xi(v: &[f64]) -> ParameterPoint {
        ParameterPoint::from_slice(v)
    }

    #[test]
    fn registry_round_trip() {
        for f in FamilyId::ALL {
            assert_eq!(f.id().parse::<FamilyId>().unwrap(), f);
        }
        assert!(matches!("ar1".parse::<FamilyId>(), Err(Error::Config(_))));
    }

    #[test]
    fn kernel_examples() {
        let ou = KernelModel::new(FamilyId::Ou);
        assert_eq!(ou.eval(&xi(&[1.5, 1.0, 1.0]), 0.0).unwrap(), 0.0);
        let carma = KernelModel::new(FamilyId::Carma21);
        assert_relative_eq!(carma.eval(&xi(&[1.5, 1.0, -1.0]), 1.0).unwrap(), 2.0 * (-1.0f64).exp(), max_relative = 1e-15);
        let lfsm = KernelModel::new(FamilyId::LfsmInc);
        assert_relative_eq!(lfsm.eval(&xi(&[1.6, 0.8, 1.0]), 0.5).unwrap(), 0.5f64.powf(0.175), max_relative = 1e-15);
    }

    #[test]
    fn lfsm_second_difference_structure() {
        let m = KernelModel::new(FamilyId::LfsmInc);
        let p = xi(&[1.8, 0.8, 0.3]);
        let eta = 0.8 - 1.0 / 1.8;
        let x: f64 = 3.7;
        let want = 0.3 * (x.powf(eta) - 2.0 * (x - 1.0).powf(eta) + (x - 2.0).powf(eta));
        assert_relative_eq!(m.eval_unchecked(&p, x), want, max_relative = 1e-14);
    }

    #[test]
    fn inadmissible_points_name_the_constraint() {
        let ou = KernelModel::new(FamilyId::Ou);
        let e = ou.eval(&xi(&[1.5, -1.0, 1.0]), 1.0).unwrap_err();
        assert!(e.to_string().contains("lambda > 0"));
        let lfsm = KernelModel::new(FamilyId::LfsmInc);
        assert!(lfsm.check(&xi(&[1.5, 0.5, 2.0])).is_ok());
        assert!(lfsm.check_lfsm_continuous(&xi(&[1.5, 0.5, 2.0])).is_err());
        let k1 = KernelModel::lfsm(1).unwrap();
        assert!(k1.check_lfsm_continuous(&xi(&[1.8, 0.6, 1.0])).is_err());
        let modou = KernelModel::new(FamilyId::ModulatedOu);
        assert!(modou.check(&xi(&[0.9, 1.0, 1.0])).is_err());
    }

    #[test]
    fn lfsm_envelope_exponents() {
        let m = KernelModel::new(FamilyId::LfsmInc);
        let env = m.envelope_constants(&xi(&[1.6, 0.8, 1.0])).unwrap();
        assert_relative_eq!(env.kappa, 0.175, max_relative = 1e-12);
        assert_relative_eq!(env.alpha, 1.825, max_relative = 1e-12);
        assert!(m.envelope_constants(&xi(&[1.5, 0.5, 1.0])).is_err());
    }

    #[test]
    fn modulated_envelope_is_linear_at_zero() {
        let m = KernelModel::new(FamilyId::ModulatedOu);
        let env = m.envelope_constants(&xi(&[1.5, 1.0, 1.0])).unwrap();
        assert_eq!(env.kappa, 1.0);
        assert_relative_eq!(m.eval_unchecked(&xi(&[1.5, 1.0, 1.0]), 1e-9) / 1e-9, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn lfsm_asymptotic_ratio_settles() {
        let m = KernelModel::new(FamilyId::LfsmInc);
        let p = xi(&[1.6, 0.8, 1.0]);
        let c = m.lfsm_asymptotic_constant(&p).unwrap();
        let e = 0.8 - 1.0 / 1.6 - 2.0;
        let r = |u: f64| m.eval_unchecked(&p, u) / (c * u.powf(e));
        assert!((r(1e4) / r(1e5) - 1.0).abs() < 0.01);
        assert!((r(1e5) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn tail_bounds_dominate_numeric_tails() {
        let cases: [(FamilyId, [f64; 3]); 6] = [
            (FamilyId::Ou, [1.5, 0.7, 1.3]),
            (FamilyId::LfsmInc, [1.8, 0.8, 0.3]),
            (FamilyId::PeriodicOu, [1.5, 1.0, 1.0]),
            (FamilyId::ModulatedOu, [1.5, 1.0, 0.8]),
            (FamilyId::GeneralizedModulatedOu, [1.8, 0.5, 0.5]),
            (FamilyId::Carma21, [1.5, 0.7, -1.2]),
        ];
        for (f, v) in cases {
            let m = KernelModel::new(f);
            let p = xi(&v);
            for t in [3.0, 6.0, 12.0] {
                let bound = m.tail_mass(&p, t).unwrap();
                let num = integrate_adaptive(
                    |x| m.eval_unchecked(&p, x).abs().powf(p.beta),
                    &[t, t + 10.0, t + 100.0, t + 1e4],
                    Tolerance::default(),
                )
                .unwrap()
                .value;
                assert!(num <= bound * (1.0 + 1e-9), "{f} t={t}: {num} > {bound}");
                if f != FamilyId::LfsmInc && f != FamilyId::PeriodicOu {
                    assert_relative_eq!(num, bound, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn covariation_of_ou_factorises() {
        let m = KernelModel::new(FamilyId::Ou);
        let c = m.covariation(&xi(&[1.5, 1.0, 1.0])).unwrap();
        assert_relative_eq!(c, (-1.0f64).exp() / 1.5, max_relative = 1e-9);
        assert!(matches!(m.covariation(&xi(&[1.0, 1.0, 1.0])), Err(Error::Unsupported(_))));
    }
}
