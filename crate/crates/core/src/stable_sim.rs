//! Symmetric stable variates and discretised simulation of the moving
//! average at integer times.
//!
//! The stochastic integral is split into cells of width `δ` with `1/δ` an
//! integer, so kernel breakpoints at integers fall on cell boundaries. Each
//! cell gets the tap `c_j = sign(g) (δ^{-1} ∫_cell |g|^β)^{1/β}`, which keeps
//! every marginal exactly stable with the right scale, and all observation
//! times share one driving-noise array.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::distr::{Distribution, Open01};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::charfn::{NormMethod, ShiftNorm};
use crate::error::{Error, Result};
use crate::kernels::{FamilyId, KernelModel, ParameterPoint};
use crate::quadrature::TanhSinh;

/// Relative β-norm mass the truncated kernel may drop.
pub const TRUNCATION_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Discretisation step `δ` of the stochastic integral.
    pub grid_step: f64,
    /// Kernel support cut `T`; chosen from the tail bound when absent.
    pub truncation: Option<f64>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { grid_step: 0.05, truncation: None, seed: 0 }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// Cells per unit time, `1/δ`.
    pub fn cells_per_unit(&self) -> Result<usize> {
        let d = self.grid_step;
        if !(d > 0.0 && d <= 0.1) {
            return Err(Error::Config(format!("grid_step must lie in (0, 0.1], got {d}")));
        }
        let p = (1.0 / d).round();
        if ((1.0 / d) - p).abs() > 1e-9 * p {
            return Err(Error::Config(format!("1/grid_step must be an integer, got {}", 1.0 / d)));
        }
        Ok(p as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub values: Vec<f64>,
    pub model_tag: Option<FamilyId>,
    pub xi_true: Option<ParameterPoint>,
}

impl SamplePath {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values, model_tag: None, xi_true: None }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Writes the single-column CSV with header `x`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x")?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut values = Vec::new();
        let mut header_seen = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if t == "x" {
                    continue;
                }
                return Err(Error::Config(format!("expected CSV header 'x', found '{t}'")));
            }
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Config(format!("line {}: cannot parse '{t}' as a number", i + 1)))?;
            if !v.is_finite() {
                return Err(Error::Config(format!("line {}: non-finite value", i + 1)));
            }
            values.push(v);
        }
        Ok(Self::from_values(values))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// One draw with characteristic function `exp(-|scale u|^β)` by the
/// Chambers–Mallows–Stuck transform.
pub fn sample_symmetric_stable<R: Rng + ?Sized>(beta: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(beta > 0.0 && beta <= 2.0) {
        return Err(Error::Domain(format!("stability index must lie in (0, 2], got {beta}")));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Domain(format!("scale must be positive, got {scale}")));
    }
    Ok(scale * cms(beta, rng))
}

#[inline]
fn cms<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let e: f64 = Open01.sample(rng);
    let v = PI * (u - 0.5);
    let w = -e.ln();
    if beta == 1.0 {
        return v.tan();
    }
    (beta * v).sin() / v.cos().powf(1.0 / beta) * ((((1.0 - beta) * v).cos()) / w).powf((1.0 - beta) / beta)
}

/// Fills `out` with i.i.d. draws of scale `scale`.
pub fn fill_symmetric_stable<R: Rng + ?Sized>(beta: f64, scale: f64, rng: &mut R, out: &mut [f64]) -> Result<()> {
    sample_symmetric_stable(beta, scale, rng).map(|_| ())?;
    for x in out.iter_mut() {
        *x = scale * cms(beta, rng);
    }
    Ok(())
}

/// Precomputed taps for repeated simulation of one `(model, ξ, cfg)`.
#[derive(Debug, Clone)]
pub struct Simulator {
    model: KernelModel,
    xi: ParameterPoint,
    taps: Vec<f64>,
    per_unit: usize,
    noise_scale: f64,
}

impl Simulator {
    pub fn new(model: &KernelModel, xi: &ParameterPoint, cfg: &SimConfig) -> Result<Self> {
        model.check(xi)?;
        let per_unit = cfg.cells_per_unit()?;
        let delta = 1.0 / per_unit as f64;
        let b = xi.beta;
        let norm = ShiftNorm::window(model, xi, 1, NormMethod::Auto)?.norm(&[1.0])?;
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Model(format!("kernel β-norm must be positive and finite, got {norm}")));
        }
        let tol = TRUNCATION_REL_TOL * norm;
        let t = match cfg.truncation {
            Some(t) => {
                if !(t > 0.0) || model.tail_mass(xi, t)? > tol {
                    return Err(Error::Config(format!(
                        "truncation {t} drops more than {TRUNCATION_REL_TOL:e} of the kernel β-norm"
                    )));
                }
                t
            }
            None => auto_truncation(model, xi, tol)?,
        };
        let cells = (t * per_unit as f64).ceil() as usize;
        let ts = TanhSinh::new(0.25, -5.0, 3.0);
        let mut taps = Vec::with_capacity(cells);
        for j in 0..cells {
            let base = (j / per_unit) as i64;
            let lo = (j % per_unit) as f64 * delta;
            let mut mass = 0.0;
            for i in 0..ts.len() {
                let (dl, dr) = (ts.from_left[i], ts.from_right[i]);
                // Position inside [0, 1) relative to `base`, exact near the left end.
                let frac = if dl <= 0.5 { lo + delta * dl } else { lo + delta - delta * dr };
                mass += ts.weights[i] * model.eval_split(xi, base, frac).abs().powf(b);
            }
            mass *= delta;
            let sign = model.eval_split(xi, base, lo + 0.5 * delta).signum();
            taps.push(sign * (mass / delta).powf(1.0 / b));
        }
        Ok(Self { model: model.clone(), xi: xi.clone(), taps, per_unit, noise_scale: delta.powf(1.0 / b) })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn cells_per_unit(&self) -> usize {
        self.per_unit
    }

    /// Simulates `X_1, …, X_n`.
    pub fn simulate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SamplePath> {
        if n < 1 {
            return Err(Error::Argument("path length must be at least 1".into()));
        }
        let p = self.per_unit;
        let j = self.taps.len();
        let mut noise = vec![0.0; (n - 1) * p + j];
        fill_symmetric_stable(self.xi.beta, self.noise_scale, rng, &mut noise)?;
        let mut values = Vec::with_capacity(n);
        for t in 0..n {
            // Cell j of the kernel pairs with noise index t p + J - 1 - j.
            let end = t * p + j;
            let window = &noise[end - j..end];
            let mut s = 0.0;
            for (c, z) in self.taps.iter().zip(window.iter().rev()) {
                s += c * z;
            }
            values.push(s);
        }
        Ok(SamplePath { values, model_tag: Some(self.model.family), xi_true: Some(self.xi.clone()) })
    }
}

fn auto_truncation(model: &KernelModel, xi: &ParameterPoint, tol: f64) -> Result<f64> {
    let coarse = model.truncation_point(xi, tol)?;
    // Refine the doubling result by bisection on the monotone tail bound.
    let (mut lo, mut hi) = ((model.last_kink() + 1) as f64, coarse);
    if model.tail_mass(xi, lo)? <= tol {
        return Ok(lo);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if model.tail_mass(xi, mid)? <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-3 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Simulates one path of `X_1..X_n` for the given model.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &KernelModel,
    xi: &ParameterPoint,
    n: usize,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<SamplePath> {
    if n < 1 {
        return Err(Error::Argument("path length must be at least 1".into()));
    }
    Simulator::new(model, xi, cfg)?.simulate(n, rng)
}

/// `k`-th order LFSM increments `X_i = Σ_j (-1)^j C(k, j) Y_{i-j}` in the
/// continuous case, simulated through the increment kernel.
#[allow(clippy::too_many_arguments)]
pub fn simulate_lfsm_increments<R: Rng + ?Sized>(
    beta: f64,
    h: f64,
    sigma: f64,
    k: u32,
    n: usize,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<SamplePath> {
    let model = KernelModel::lfsm(k)?;
    let xi = ParameterPoint::new(beta, vec![h, sigma]);
    model.check_lfsm_continuous(&xi)?;
    simulate_path(&model, &xi, n, cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn gaussian_limit_has_variance_two() {
        let mut rng = rng_from_seed(1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_symmetric_stable(2.0, 1.0, &mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((1.94..=2.06).contains(&var), "variance {var}");
    }

    #[test]
    fn median_is_zero() {
        for beta in [0.7, 1.0, 1.5] {
            let mut rng = rng_from_seed(2);
            let mut xs: Vec<f64> = (0..100_000).map(|_| sample_symmetric_stable(beta, 1.0, &mut rng).unwrap()).collect();
            xs.sort_by(|a, b| a.total_cmp(b));
            assert!(xs[50_000].abs() < 0.02);
        }
    }

    #[test]
    fn sampler_rejects_bad_arguments() {
        let mut rng = rng_from_seed(3);
        assert!(sample_symmetric_stable(2.5, 1.0, &mut rng).is_err());
        assert!(sample_symmetric_stable(1.5, 0.0, &mut rng).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { grid_step: 0.2, ..SimConfig::default() }.cells_per_unit().is_err());
        assert!(SimConfig { grid_step: 0.03, ..SimConfig::default() }.cells_per_unit().is_err());
        assert_eq!(SimConfig::default().cells_per_unit().unwrap(), 20);
    }

    #[test]
    fn lfsm_taps_follow_second_difference() {
        let model = KernelModel::new(FamilyId::LfsmInc);
        let xi = ParameterPoint::new(1.8, vec![0.8, 1.0]);
        let sim = Simulator::new(&model, &xi, &SimConfig::default()).unwrap();
        let taps = sim.taps();
        assert!(taps[0] > 0.0);
        // Far out the kernel is a smooth second difference, negative curvature sign.
        let eta: f64 = 0.8 - 1.0 / 1.8;
        assert!(taps[20 * 50] * (eta * (eta - 1.0)).signum() > 0.0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = SamplePath::from_values(vec![0.1, -3.25e-7, 1.0 / 3.0, 12345.678]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = SamplePath::read_csv(&buf[..]).unwrap();
        assert_eq!(p.values, q.values);
        assert!(SamplePath::read_csv(&b"y\n1\n"[..]).is_err());
        assert!(SamplePath::read_csv(&b"x\nabc\n"[..]).is_err());
    }

    #[test]
    fn same_seed_same_path() {
        let model = KernelModel::new(FamilyId::Ou);
        let xi = ParameterPoint::new(1.5, vec![1.0, 1.0]);
        let cfg = SimConfig::default();
        let a = simulate_path(&model, &xi, 50, &cfg, &mut rng_from_seed(9)).unwrap();
        let b = simulate_path(&model, &xi, 50, &cfg, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a.values, b.values);
        assert!(simulate_path(&model, &xi, 0, &cfg, &mut rng_from_seed(9)).is_err());
    }
}
