//! Monte Carlo checks of the central limit behaviour.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::charfn::{asymptotic_cov, CovSeriesSpec, NormMethod, ShiftNorm};
use crate::error::{Error, Result};
use crate::estimator::{gram_hessian, relative_min_eigenvalue, EstimateOptions, QuadratureGrid};
use crate::harness::{replicate_estimates, ReplicationPlan};
use crate::kernels::{KernelModel, ParameterPoint};
use crate::rng::replication_rng;
use crate::stable_sim::{SimConfig, Simulator};

pub const MIN_CLT_REPS: usize = 50;
/// Relative eigenvalue below which the Gram matrix counts as singular.
pub const IDENTIFIABILITY_TOL: f64 = 1e-6;
pub const NORMALITY_BAND: (f64, f64) = (-0.4, 0.4);

/// `V_n[j] = n^{-1/2} Σ_{s=0}^{n-m} (cos⟨u_j, Z_s⟩ - φ_ξ(u_j))`.
pub fn vn_statistic(values: &[f64], model: &KernelModel, xi: &ParameterPoint, u_points: &[Vec<f64>], m: usize) -> Result<Vec<f64>> {
    let norm = ShiftNorm::window(model, xi, m, NormMethod::Auto)?;
    let phi: Vec<f64> = u_points.iter().map(|u| norm.norm(u).map(|v| (-v).exp())).collect::<Result<_>>()?;
    vn_with_means(values, u_points, m, &phi)
}

fn vn_with_means(values: &[f64], u_points: &[Vec<f64>], m: usize, phi: &[f64]) -> Result<Vec<f64>> {
    let n = values.len();
    if n < m || m == 0 {
        return Err(Error::Argument(format!("path of length {n} is shorter than the window {m}")));
    }
    if let Some(u) = u_points.iter().find(|u| u.len() != m) {
        return Err(Error::Argument(format!("frequency {u:?} does not have {m} coordinates")));
    }
    let root = (n as f64).sqrt();
    Ok(u_points
        .iter()
        .zip(phi)
        .map(|(u, &p)| {
            let mut s = 0.0;
            for w in values.windows(m) {
                let arg: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
                s += arg.cos() - p;
            }
            s / root
        })
        .collect())
}

/// Sample covariance with denominator `k - 1`.
pub fn sample_covariance(samples: &[Vec<f64>]) -> DMatrix<f64> {
    let k = samples.len();
    let d = samples.first().map_or(0, |s| s.len());
    let mean: Vec<f64> = (0..d).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / k as f64).collect();
    DMatrix::from_fn(d, d, |i, j| {
        samples.iter().map(|s| (s[i] - mean[i]) * (s[j] - mean[j])).sum::<f64>() / (k as f64 - 1.0).max(1.0)
    })
}

/// Mean, skewness and excess kurtosis of one coordinate.
pub fn moments(x: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let mean = x.iter().sum::<f64>() / k;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
    if m2 == 0.0 {
        return (mean, 0.0, 0.0);
    }
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / k;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / k;
    (mean, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

#[derive(Debug, Clone, Copy)]
pub struct CltSpec {
    pub sim: SimConfig,
    pub seed: u64,
    pub series: CovSeriesSpec,
}

impl Default for CltSpec {
    fn default() -> Self {
        Self { sim: SimConfig::default(), seed: 0, series: CovSeriesSpec::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub u_points: Vec<Vec<f64>>,
    pub n: usize,
    pub reps: usize,
    pub mc_cov: DMatrix<f64>,
    pub series_cov: DMatrix<f64>,
    pub relative_gap: DMatrix<f64>,
    /// Mean of `V_n` per frequency.
    pub mean: Vec<f64>,
    /// Mean of `√n (φ_n - φ_ξ)` per frequency; it differs from `mean` by
    /// `(m - 1) φ_ξ / √n` while the covariance is the same.
    pub mean_ecf: Vec<f64>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
}

impl CltReport {
    pub fn frobenius_gap(&self) -> f64 {
        (&self.mc_cov - &self.series_cov).norm()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,mc,series,gap\n");
        let d = self.u_points.len();
        for i in 0..d {
            for j in i..d {
                let _ = writeln!(out, "{i},{j},{},{},{}", self.mc_cov[(i, j)], self.series_cov[(i, j)], self.relative_gap[(i, j)]);
            }
        }
        out
    }
}

fn relative_gap(mc: f64, series: f64) -> f64 {
    if mc == series {
        0.0
    } else {
        (mc - series).abs() / series.abs()
    }
}

/// Compares the Monte Carlo covariance of `V_n` with the truncated series.
#[allow(clippy::too_many_arguments)]
pub fn verify_clt(
    model: &KernelModel,
    xi: &ParameterPoint,
    u_points: &[Vec<f64>],
    m: usize,
    n: usize,
    reps: usize,
    spec: &CltSpec,
) -> Result<CltReport> {
    if reps < MIN_CLT_REPS {
        return Err(Error::Argument(format!("need at least {MIN_CLT_REPS} replications, got {reps}")));
    }
    if n < m {
        return Err(Error::Argument(format!("path length {n} is shorter than the window {m}")));
    }
    let d = u_points.len();
    let mut series_cov = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = asymptotic_cov(model, xi, &u_points[i], &u_points[j], spec.series)?.value;
            series_cov[(i, j)] = v;
            series_cov[(j, i)] = v;
        }
    }
    let norm = ShiftNorm::window(model, xi, m, NormMethod::Auto)?;
    let phi: Vec<f64> = u_points.iter().map(|u| norm.norm(u).map(|v| (-v).exp())).collect::<Result<_>>()?;
    let sim = Simulator::new(model, xi, &spec.sim)?;
    let samples: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(spec.seed, r as u64);
            let path = sim.simulate(n, &mut rng)?;
            vn_with_means(&path.values, u_points, m, &phi)
        })
        .collect::<Result<_>>()?;
    let mc_cov = sample_covariance(&samples);
    let gap = DMatrix::from_fn(d, d, |i, j| relative_gap(mc_cov[(i, j)], series_cov[(i, j)]));
    let shift = (m as f64 - 1.0) / (n as f64).sqrt();
    let mut mean = Vec::with_capacity(d);
    let mut mean_ecf = Vec::with_capacity(d);
    let mut skewness = Vec::with_capacity(d);
    let mut excess_kurtosis = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        let (mu, sk, ku) = moments(&col);
        mean.push(mu);
        mean_ecf.push(mu - shift * phi[j]);
        skewness.push(sk);
        excess_kurtosis.push(ku);
    }
    Ok(CltReport {
        u_points: u_points.to_vec(),
        n,
        reps,
        mc_cov,
        series_cov,
        relative_gap: gap,
        mean,
        mean_ecf,
        skewness,
        excess_kurtosis,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalityReport {
    pub xi0: ParameterPoint,
    pub n: usize,
    pub reps: usize,
    pub failures: usize,
    /// Estimated coordinates.
    pub params: Vec<usize>,
    /// `√n (ξ̂ - ξ0)` restricted to `params`, one row per usable replication.
    pub scaled_errors: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
}

impl NormalityReport {
    /// Whether skewness and excess kurtosis lie in [`NORMALITY_BAND`] for
    /// every coordinate.
    pub fn within_bands(&self) -> bool {
        let (lo, hi) = NORMALITY_BAND;
        self.skewness.iter().chain(&self.excess_kurtosis).all(|&v| v >= lo && v <= hi)
    }

    /// `|mean| ≤ z · std / √reps` per coordinate.
    pub fn centred(&self, z: f64) -> Vec<bool> {
        let k = self.scaled_errors.len() as f64;
        self.mean.iter().zip(&self.std).map(|(m, s)| m.abs() <= z * s / k.sqrt()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct NormalitySpec {
    pub sim: SimConfig,
    pub seed: u64,
    pub options: EstimateOptions,
    pub fd_step: f64,
}

impl Default for NormalitySpec {
    fn default() -> Self {
        Self { sim: SimConfig::default(), seed: 0, options: EstimateOptions::default(), fd_step: 1e-4 }
    }
}

/// Replicated fits summarised through `√n (ξ̂ - ξ0)`. Refuses
/// configurations whose Gram matrix is singular on the free coordinates.
#[allow(clippy::too_many_arguments)]
pub fn verify_estimator_normality(
    model: &KernelModel,
    xi0: &ParameterPoint,
    n: usize,
    reps: usize,
    grid: &QuadratureGrid,
    start: &ParameterPoint,
    spec: &NormalitySpec,
) -> Result<NormalityReport> {
    if reps < 2 {
        return Err(Error::Argument("need at least 2 replications".into()));
    }
    let d = xi0.len();
    let params: Vec<usize> = match &spec.options.free {
        Some(mask) if mask.len() == d => (0..d).filter(|&i| mask[i]).collect(),
        Some(mask) => return Err(Error::Config(format!("free mask has {} entries, expected {d}", mask.len()))),
        None => (0..d).collect(),
    };
    let gram = gram_hessian(model, xi0, grid, spec.fd_step)?;
    let rel = relative_min_eigenvalue(&gram, &params);
    if !(rel > IDENTIFIABILITY_TOL) {
        return Err(Error::NotIdentifiable(format!(
            "{} is not identifiable from windows of length {} at {:?}: relative smallest Gram eigenvalue {rel:e}",
            model.family,
            grid.m,
            xi0.to_vec()
        )));
    }
    let plan = ReplicationPlan { model, xi0, n, grid, start, options: &spec.options, sim: &spec.sim, seed: spec.seed };
    let results = replicate_estimates(&plan, reps)?;
    let truth = xi0.to_vec();
    let root = (n as f64).sqrt();
    let mut scaled = Vec::with_capacity(reps);
    for r in results {
        match r {
            Ok(e) if e.converged => {
                let v = e.xi_hat.to_vec();
                scaled.push(params.iter().map(|&p| root * (v[p] - truth[p])).collect::<Vec<f64>>());
            }
            Ok(_) => {}
            Err(e) if e.is_numeric() => {}
            Err(e) => return Err(e),
        }
    }
    let mut mean = Vec::new();
    let mut std = Vec::new();
    let mut skewness = Vec::new();
    let mut excess_kurtosis = Vec::new();
    let cov = sample_covariance(&scaled);
    for k in 0..params.len() {
        let col: Vec<f64> = scaled.iter().map(|s| s[k]).collect();
        let (mu, sk, ku) = moments(&col);
        mean.push(mu);
        std.push(cov[(k, k)].sqrt());
        skewness.push(sk);
        excess_kurtosis.push(ku);
    }
    Ok(NormalityReport {
        xi0: xi0.clone(),
        n,
        reps,
        failures: reps - scaled.len(),
        params,
        scaled_errors: scaled,
        mean,
        std,
        skewness,
        excess_kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::empirical_cf;
    use crate::estimator::{build_grid, WeightSpec};
    use crate::kernels::FamilyId;

    fn ou() -> (KernelModel, ParameterPoint) {
        (KernelModel::new(FamilyId::Ou), ParameterPoint::new(1.5, vec![1.0, 1.0]))
    }

    #[test]
    fn vn_vanishes_at_origin() {
        let (model, xi) = ou();
        let x = [0.3, -1.2, 4.0, 0.7];
        assert_eq!(vn_statistic(&x, &model, &xi, &[vec![0.0, 0.0]], 2).unwrap(), vec![0.0]);
    }

    #[test]
    fn vn_matches_hand_computation_and_ecf() {
        let (model, xi) = ou();
        let x: [f64; 10] = [0.3, -1.2, 4.0, 0.7, 0.1, -0.5, 2.2, 1.1, -3.0, 0.4];
        let u = vec![0.6, -0.2];
        let phi = (-crate::charfn::beta_norm(&model, &xi, &u).unwrap()).exp();
        let n = x.len() as f64;
        let mut hand = 0.0;
        for s in 0..9 {
            hand += (0.6 * x[s] - 0.2 * x[s + 1]).cos() - phi;
        }
        hand /= n.sqrt();
        let v = vn_statistic(&x, &model, &xi, &[u.clone()], 2).unwrap()[0];
        assert!((v - hand).abs() < 1e-9);
        let ecf = n.sqrt() * (empirical_cf(&x, &u).unwrap() - phi);
        assert!((v - (ecf + phi / n.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn moment_summary() {
        let (m, s, k) = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!(s.abs() < 1e-15);
        assert!((k + 1.36).abs() < 1e-12);
        let c = sample_covariance(&[vec![1.0, 2.0], vec![3.0, 6.0]]);
        assert_eq!(c[(0, 0)], 2.0);
        assert_eq!(c[(0, 1)], 4.0);
    }

    #[test]
    fn clt_refuses_few_reps_and_handles_origin() {
        let (model, xi) = ou();
        let u = vec![vec![1.0]];
        assert!(matches!(verify_clt(&model, &xi, &u, 1, 100, 10, &CltSpec::default()), Err(Error::Argument(_))));
        let r = verify_clt(&model, &xi, &[vec![0.0]], 1, 100, 50, &CltSpec::default()).unwrap();
        assert_eq!(r.mc_cov[(0, 0)], 0.0);
        assert_eq!(r.series_cov[(0, 0)], 0.0);
        assert_eq!(r.relative_gap[(0, 0)], 0.0);
        assert!(r.to_csv().starts_with("i,j,mc,series,gap\n0,0,0,0,0"));
    }

    #[test]
    fn normality_refuses_unidentifiable() {
        let model = KernelModel::new(FamilyId::ModulatedOu);
        let xi = ParameterPoint::new(1.6, vec![1.0, 1.0]);
        let grid = build_grid(1, 20, &WeightSpec::new(1.0, 1).unwrap()).unwrap();
        let r = verify_estimator_normality(&model, &xi, 100, 10, &grid, &xi, &NormalitySpec::default());
        assert!(matches!(r, Err(Error::NotIdentifiable(_))));
    }
}
