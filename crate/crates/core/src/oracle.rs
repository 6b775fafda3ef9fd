//! Closed-form identities checked against direct numerical integration.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::kernels::{carma_c, carma_covariation, modou_covariation, modou_scale_identity, ou_norm_closed_form, periodic_norm_closed_form};
use crate::quadrature::{integrate_adaptive, Tolerance};
use crate::rng::rng_from_seed;

pub const ORACLE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct OracleCase {
    pub identity: &'static str,
    pub inputs: Vec<f64>,
    pub closed_form: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

impl OracleCase {
    pub fn passed(&self) -> bool {
        self.rel_error <= ORACLE_REL_TOL
    }
}

const TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-11, max_intervals: 50_000 };

/// `∫_a^∞ f` for an integrand decaying at least like `e^{-rate x}`.
fn half_line<F: Fn(f64) -> f64>(f: F, a: f64, inner: &[f64], rate: f64) -> Result<f64> {
    let end = a + 45.0 / rate;
    let mut bp = vec![a];
    bp.extend(inner.iter().copied().filter(|&x| x > a && x < end));
    let mut x = bp.last().copied().unwrap_or(a).max(a) + 1.0;
    while x < end {
        bp.push(x);
        x += 1.0;
    }
    bp.push(end);
    Ok(integrate_adaptive(f, &bp, TOL)?.value)
}

fn case(identity: &'static str, inputs: Vec<f64>, closed_form: f64, numeric: f64) -> OracleCase {
    let rel_error = (closed_form - numeric).abs() / numeric.abs().max(f64::MIN_POSITIVE);
    OracleCase { identity, inputs, closed_form, numeric, rel_error }
}

pub const IDENTITIES: [&str; 6] = ["ou_norm", "periodic_norm", "modou_scale", "modou_covariation", "carma_c", "carma_covariation"];

/// Runs `per_identity` random admissible cases of each identity.
pub fn run_oracle_suite(per_identity: usize, seed: u64) -> Result<Vec<OracleCase>> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(per_identity * IDENTITIES.len());
    for _ in 0..per_identity {
        let beta = rng.random_range(0.6..1.95);
        let sigma = rng.random_range(0.5..2.0);
        let lambda = rng.random_range(0.2..3.0);
        let u2 = rng.random_range(0.0..2.0);
        let u1 = u2 + rng.random_range(0.1..2.0);
        let closed = ou_norm_closed_form(sigma, lambda, beta, u1, u2)?;
        let g = |x: f64| if x >= 0.0 { sigma * (-lambda * x).exp() } else { 0.0 };
        let numeric = half_line(|x| (u1 * g(x) + u2 * g(x + 1.0)).abs().powf(beta), -1.0, &[0.0], lambda * beta)?;
        out.push(case("ou_norm", vec![sigma, lambda, beta, u1, u2], closed, numeric));
    }
    for _ in 0..per_identity {
        let beta = rng.random_range(0.6..1.95);
        let t1 = rng.random_range(0.3..2.0);
        let t2 = rng.random_range(0.0..2.0);
        let u2 = rng.random_range(0.0..2.0);
        let u1 = u2 + rng.random_range(0.1..2.0);
        let f = |x: f64| -0.5 * (1.0 + (2.0 * PI * x).sin());
        let closed = periodic_norm_closed_form(t1, t2, beta, u1, u2, f)?;
        let g = |x: f64| if x >= 0.0 { (-t1 * x - t2 * f(x)).exp() } else { 0.0 };
        let quarters: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.25).collect();
        let numeric = half_line(|x| (u1 * g(x) + u2 * g(x + 1.0)).abs().powf(beta), -1.0, &quarters, t1 * beta)?;
        out.push(case("periodic_norm", vec![t1, t2, beta, u1, u2], closed, numeric));
    }
    for _ in 0..per_identity {
        let beta = rng.random_range(1.05..1.95);
        let t1 = rng.random_range(0.3..3.0);
        let t2 = rng.random_range(0.3..3.0);
        let g = |s: f64| t1 * s * (-t2 * s).exp();
        let peak = [1.0 / t2];
        let scale = half_line(|s| g(s).powf(beta), 0.0, &peak, 0.5 * t2 * beta)?;
        out.push(case("modou_scale", vec![t1, t2, beta], modou_scale_identity(t1, t2, beta)?, scale));
        let cov = half_line(|s| g(s + 1.0) * g(s).powf(beta - 1.0), 0.0, &peak, 0.5 * t2 * beta)?;
        out.push(case("modou_covariation", vec![t1, t2, beta], modou_covariation(t1, t2, beta)?, cov));
    }
    for _ in 0..per_identity {
        let beta = rng.random_range(1.05..1.95);
        let theta = rng.random_range(0.05..3.0);
        let lambda = -rng.random_range(0.3..3.0);
        let g = |s: f64| (1.0 + theta * s) * (lambda * s).exp();
        let rate = -0.5 * lambda * beta;
        let c = half_line(|s| g(s).powf(beta), 0.0, &[], rate)?;
        out.push(case("carma_c", vec![theta, lambda, beta], carma_c(theta, lambda, beta)?, c));
        let cov = half_line(|s| g(s + 1.0) * g(s).powf(beta - 1.0), 0.0, &[], rate)?;
        out.push(case("carma_covariation", vec![theta, lambda, beta], carma_covariation(theta, lambda, beta)?, cov));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cases = run_oracle_suite(3, 11).unwrap();
        assert_eq!(cases.len(), 18);
        for c in &cases {
            assert!(c.passed(), "{c:?}");
        }
    }
}
