//! Closed-form β-norms and covariations of the exponential families.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, Tolerance};
use crate::special::scaled_upper_gamma;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

fn stable_index(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta must lie in (0, 2), got {beta}")))
    }
}

/// `‖u1 g + u2 g(· + 1)‖_β^β` for the OU kernel `σ e^{-λx}`:
/// `σ^β / (βλ) [u2^β (1 - e^{-βλ}) + (u1 + u2 e^{-λ})^β]` on `u1 > u2 ≥ 0`.
pub fn ou_norm_closed_form(sigma: f64, lambda: f64, beta: f64, u1: f64, u2: f64) -> Result<f64> {
    positive("sigma", sigma)?;
    positive("lambda", lambda)?;
    stable_index(beta)?;
    if !(u1 > u2 && u2 >= 0.0) {
        return Err(Error::Precondition(format!("formula needs u1 > u2 >= 0, got u1={u1}, u2={u2}")));
    }
    let first = u2.powf(beta) * (-(-beta * lambda).exp_m1());
    let second = (u1 + u2 * (-lambda).exp()).powf(beta);
    Ok(sigma.powf(beta) / (beta * lambda) * (first + second))
}

/// `∫_0^∞ (θ1 s e^{-θ2 s})^β ds = θ1^β Γ(β+1) / (βθ2)^{β+1}`.
pub fn modou_scale_identity(theta1: f64, theta2: f64, beta: f64) -> Result<f64> {
    positive("theta1", theta1)?;
    positive("theta2", theta2)?;
    stable_index(beta)?;
    Ok(theta1.powf(beta) * gamma(beta + 1.0) / (beta * theta2).powf(beta + 1.0))
}

/// Covariation `[X_1, X_0]_β` of the modulated OU kernel.
pub fn modou_covariation(theta1: f64, theta2: f64, beta: f64) -> Result<f64> {
    Ok(modou_scale_identity(theta1, theta2, beta)? * (-theta2).exp() * (1.0 + theta2))
}

/// `c = ∫_0^∞ (1 + θx)^β e^{λβx} dx`, written through the incomplete gamma
/// function. `θ = 0` gives the limit `-1 / (λβ)`.
pub fn carma_c(theta: f64, lambda: f64, beta: f64) -> Result<f64> {
    stable_index(beta)?;
    if !(lambda < 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("CARMA needs lambda < 0, got {lambda}")));
    }
    if theta == 0.0 {
        return Ok(-1.0 / (lambda * beta));
    }
    positive("theta", theta)?;
    let x = -lambda * beta / theta;
    Ok(scaled_upper_gamma(beta + 1.0, x)? / theta)
}

/// Covariation of the CARMA(2,1) kernel: `e^λ (c (1 - λ) - 1/β)`.
pub fn carma_covariation(theta: f64, lambda: f64, beta: f64) -> Result<f64> {
    let c = carma_c(theta, lambda, beta)?;
    Ok(lambda.exp() * (c * (1.0 - lambda) - 1.0 / beta))
}

/// `‖u1 g + u2 g(· + 1)‖_β^β` for the periodic kernel
/// `exp(-θ1 x - θ2 f(x))` with 1-periodic `f`, on `u1 > u2 ≥ 0`:
/// `u2^β I_1 + (u1 + u2 e^{-θ1})^β I_1 / (1 - e^{-βθ1})` where
/// `I_1 = ∫_0^1 e^{-β(θ1 x + θ2 f(x))} dx`.
pub fn periodic_norm_closed_form<F: Fn(f64) -> f64>(
    theta1: f64,
    theta2: f64,
    beta: f64,
    u1: f64,
    u2: f64,
    f: F,
) -> Result<f64> {
    positive("theta1", theta1)?;
    stable_index(beta)?;
    if !theta2.is_finite() {
        return Err(Error::Domain("theta2 must be finite".into()));
    }
    if !(u1 > u2 && u2 >= 0.0) {
        return Err(Error::Precondition(format!("formula needs u1 > u2 >= 0, got u1={u1}, u2={u2}")));
    }
    let i1 = integrate_adaptive(
        |x| (-beta * (theta1 * x + theta2 * f(x))).exp(),
        &[0.0, 0.25, 0.5, 0.75, 1.0],
        Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 2000 },
    )?
    .value;
    let i_inf = i1 / (-(-beta * theta1).exp_m1());
    Ok(u2.powf(beta) * i1 + (u1 + u2 * (-theta1).exp()).powf(beta) * i_inf)
}
