//! Configuration driven Monte Carlo studies.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{build_grid, default_design, estimate, EstimateOptions, EstimationResult, QuadratureGrid, WeightSpec};
use crate::kernels::{FamilyId, KernelModel, ParameterPoint};
use crate::rng::{derive_seed, replication_rng};
use crate::stable_sim::{SimConfig, Simulator};

pub const DEFAULT_REPS: usize = 200;
/// Cells with a larger share of failed minimisations are flagged.
pub const FAILURE_FLAG_SHARE: f64 = 0.2;

/// Default Nelder–Mead start point for a family.
pub fn default_start(family: FamilyId) -> ParameterPoint {
    let v: [f64; 3] = match family {
        FamilyId::LfsmInc => [1.5, 0.5, 2.0],
        FamilyId::Ou => [1.5, 0.5, 1.1],
        FamilyId::GeneralizedModulatedOu => [1.5, 1.0, 1.0],
        FamilyId::PeriodicOu | FamilyId::ModulatedOu => [1.5, 0.5, 0.5],
        FamilyId::Carma21 => [1.5, 0.5, -0.5],
    };
    ParameterPoint::from_slice(&v)
}

/// One or several true parameter vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthList {
    One(Vec<f64>),
    Many(Vec<Vec<f64>>),
}

impl TruthList {
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            TruthList::One(v) => vec![v.clone()],
            TruthList::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub family: FamilyId,
    pub xi0: TruthList,
    /// Parameters held fixed at their true value are `false`.
    #[serde(default)]
    pub free: Option<Vec<bool>>,
    #[serde(default)]
    pub m: Option<usize>,
    pub n: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub nodes_per_dim: Option<usize>,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub lfsm_order: Option<u32>,
    #[serde(default)]
    pub grid_step: Option<f64>,
    #[serde(default)]
    pub restarts: Option<usize>,
}

fn default_reps() -> usize {
    DEFAULT_REPS
}

impl StudyConfig {
    pub fn new(family: FamilyId, xi0: Vec<Vec<f64>>, n: Vec<usize>) -> Self {
        Self {
            family,
            xi0: TruthList::Many(xi0),
            free: None,
            m: None,
            n,
            reps: DEFAULT_REPS,
            nu: None,
            nodes_per_dim: None,
            start: None,
            seed: 0,
            output: None,
            lfsm_order: None,
            grid_step: None,
            restarts: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed study config: {e}")))
    }

    pub fn model(&self) -> Result<KernelModel> {
        match (self.family, self.lfsm_order) {
            (FamilyId::LfsmInc, Some(k)) => KernelModel::lfsm(k),
            (_, Some(_)) => Err(Error::Config("lfsm_order only applies to lfsm".into())),
            (f, None) => Ok(KernelModel::new(f)),
        }
    }

    /// `(m, nodes per dimension, ν)` after defaults.
    pub fn design(&self) -> (usize, usize, f64) {
        let (m, nodes, nu) = default_design(self.family);
        (self.m.unwrap_or(m), self.nodes_per_dim.unwrap_or(nodes), self.nu.unwrap_or(nu))
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::default();
        if let Some(h) = self.grid_step {
            cfg.grid_step = h;
        }
        cfg
    }

    pub fn truths(&self) -> Vec<ParameterPoint> {
        self.xi0.points().iter().map(|v| ParameterPoint::from_slice(v)).collect()
    }

    /// Start point for the cell with truth `xi0`: fixed coordinates are
    /// taken from the truth.
    pub fn start_for(&self, xi0: &ParameterPoint) -> ParameterPoint {
        let mut s = self.start.as_ref().map(|v| ParameterPoint::from_slice(v)).unwrap_or_else(|| default_start(self.family)).to_vec();
        let truth = xi0.to_vec();
        if let Some(mask) = &self.free {
            for (i, free) in mask.iter().enumerate() {
                if !free {
                    s[i] = truth[i];
                }
            }
        }
        ParameterPoint::from_slice(&s)
    }

    pub fn estimate_options(&self) -> EstimateOptions {
        let mut o = EstimateOptions { free: self.free.clone(), ..Default::default() };
        if let Some(r) = self.restarts {
            o.nelder_mead.restarts = r;
        }
        o
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        let d = model.n_params();
        if self.reps < 1 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.n.is_empty() {
            return Err(Error::Config("n list is empty".into()));
        }
        let (m, nodes, nu) = self.design();
        if m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if let Some(&n) = self.n.iter().find(|&&n| n < m) {
            return Err(Error::Config(format!("path length {n} is shorter than the window {m}")));
        }
        if nodes == 0 || !(nu > 0.0) {
            return Err(Error::Config("nodes_per_dim and nu must be positive".into()));
        }
        if let Some(mask) = &self.free {
            if mask.len() != d {
                return Err(Error::Config(format!("free mask has {} entries, {} has {d} parameters", mask.len(), self.family)));
            }
            if !mask.iter().any(|&f| f) {
                return Err(Error::Config("free mask fixes every parameter".into()));
            }
        }
        if let Some(s) = &self.start {
            if s.len() != d {
                return Err(Error::Config(format!("start has {} entries, {} has {d} parameters", s.len(), self.family)));
            }
        }
        let truths = self.truths();
        if truths.is_empty() {
            return Err(Error::Config("xi0 is empty".into()));
        }
        for xi in &truths {
            if xi.len() != d {
                return Err(Error::Config(format!("xi0 {:?} does not have {d} entries", xi.to_vec())));
            }
            model.check(xi).map_err(|e| Error::Config(format!("xi0 {:?}: {e}", xi.to_vec())))?;
            let s = self.start_for(xi);
            model.check(&s).map_err(|e| Error::Config(format!("start {:?}: {e}", s.to_vec())))?;
        }
        self.sim_config().cells_per_unit().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Everything needed to simulate and fit one study cell.
#[derive(Debug, Clone)]
pub struct ReplicationPlan<'a> {
    pub model: &'a KernelModel,
    pub xi0: &'a ParameterPoint,
    pub n: usize,
    pub grid: &'a QuadratureGrid,
    pub start: &'a ParameterPoint,
    pub options: &'a EstimateOptions,
    pub sim: &'a SimConfig,
    pub seed: u64,
}

/// Simulates and fits `reps` independent paths. Replication `r` uses the
/// stream `replication_rng(seed, r)`; results come back in index order.
pub fn replicate_estimates(plan: &ReplicationPlan<'_>, reps: usize) -> Result<Vec<Result<EstimationResult>>> {
    let sim = Simulator::new(plan.model, plan.xi0, plan.sim)?;
    Ok((0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(plan.seed, r as u64);
            let path = sim.simulate(plan.n, &mut rng)?;
            estimate(&path.values, plan.model, plan.grid, plan.start, plan.options)
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub xi0: ParameterPoint,
    pub n: usize,
    pub reps: usize,
    pub failures: usize,
    /// Indices of the estimated coordinates.
    pub params: Vec<usize>,
    pub abs_bias: Vec<f64>,
    pub std: Vec<f64>,
    /// Converged estimates, one full parameter vector per replication.
    pub estimates: Vec<Vec<f64>>,
    /// Only one usable replication, so `std` is reported as zero.
    pub degenerate: bool,
    /// More than the tolerated share of minimisations failed.
    pub failure_flag: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub family: FamilyId,
    pub param_names: Vec<String>,
    pub cells: Vec<CellReport>,
}

impl MonteCarloReport {
    pub fn flagged_cells(&self) -> Vec<&CellReport> {
        self.cells.iter().filter(|c| c.failure_flag || c.degenerate).collect()
    }

    pub fn csv_header(&self) -> String {
        let theta: Vec<String> = self.param_names.iter().skip(1).map(|p| format!("{p}0")).collect();
        format!("family,beta0,{},n,reps,param,abs_bias,std,failures", theta.join(","))
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for c in &self.cells {
            let truth: Vec<String> = c.xi0.to_vec().iter().map(|v| v.to_string()).collect();
            for (k, &p) in c.params.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    self.family,
                    truth.join(","),
                    c.n,
                    c.reps,
                    self.param_names[p],
                    c.abs_bias[k],
                    c.std[k],
                    c.failures
                );
            }
        }
        out
    }

    /// Human readable notes on flagged cells, kept out of the CSV.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        for c in &self.cells {
            let at = format!("xi0={:?} n={}", c.xi0.to_vec(), c.n);
            if c.failure_flag {
                w.push(format!("{at}: {} of {} minimisations failed", c.failures, c.reps));
            }
            if c.degenerate {
                w.push(format!("{at}: single usable replication, std reported as 0"));
            }
        }
        w
    }
}

/// Absolute bias and sample standard deviation of each coordinate.
pub fn summarize(estimates: &[Vec<f64>], truth: &[f64], params: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let k = estimates.len();
    let mut bias = Vec::with_capacity(params.len());
    let mut std = Vec::with_capacity(params.len());
    for &p in params {
        if k == 0 {
            bias.push(f64::NAN);
            std.push(f64::NAN);
            continue;
        }
        let mean = estimates.iter().map(|e| e[p]).sum::<f64>() / k as f64;
        bias.push((mean - truth[p]).abs());
        if k < 2 {
            std.push(0.0);
        } else {
            let ss: f64 = estimates.iter().map(|e| (e[p] - mean).powi(2)).sum();
            std.push((ss / (k - 1) as f64).sqrt());
        }
    }
    (bias, std)
}

/// Runs every `(ξ0, n)` cell of the study on the current rayon pool.
pub fn run_study(config: &StudyConfig) -> Result<MonteCarloReport> {
    config.validate()?;
    let model = config.model()?;
    let (m, nodes, nu) = config.design();
    let grid = build_grid(m, nodes, &WeightSpec::new(nu, m)?)?;
    let sim = config.sim_config();
    let options = config.estimate_options();
    let d = model.n_params();
    let params: Vec<usize> = match &config.free {
        Some(mask) => (0..d).filter(|&i| mask[i]).collect(),
        None => (0..d).collect(),
    };
    let mut cells = Vec::new();
    let mut cell_index = 0u64;
    for xi0 in config.truths() {
        let start = config.start_for(&xi0);
        for &n in &config.n {
            let plan = ReplicationPlan {
                model: &model,
                xi0: &xi0,
                n,
                grid: &grid,
                start: &start,
                options: &options,
                sim: &sim,
                seed: derive_seed(config.seed, cell_index),
            };
            cell_index += 1;
            let results = replicate_estimates(&plan, config.reps)?;
            let mut estimates = Vec::with_capacity(config.reps);
            for r in results {
                match r {
                    Ok(e) if e.converged => estimates.push(e.xi_hat.to_vec()),
                    Ok(_) => {}
                    Err(e) if e.is_numeric() => {}
                    Err(e) => return Err(e),
                }
            }
            let failures = config.reps - estimates.len();
            let (abs_bias, std) = summarize(&estimates, &xi0.to_vec(), &params);
            cells.push(CellReport {
                xi0: xi0.clone(),
                n,
                reps: config.reps,
                failures,
                params: params.clone(),
                abs_bias,
                std,
                degenerate: estimates.len() == 1,
                failure_flag: failures as f64 > FAILURE_FLAG_SHARE * config.reps as f64,
                estimates,
            });
        }
    }
    Ok(MonteCarloReport {
        family: config.family,
        param_names: model.param_names().iter().map(|s| s.to_string()).collect(),
        cells,
    })
}

fn grid_cells(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> Vec<f64>) -> Vec<Vec<f64>> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).map(|(x, y)| f(x, y)).collect()
}

pub const PRESET_TABLES: [u8; 7] = [1, 2, 3, 4, 5, 6, 7];
/// Number of cells kept when a preset runs without `full`.
pub const SMOKE_CELLS: usize = 4;

/// Simulation study presets 1–7. Without `full` only the first
/// [`SMOKE_CELLS`] cells are kept.
pub fn preset(table: u8, full: bool) -> Result<StudyConfig> {
    let lfsm_cells: Vec<Vec<f64>> = [(0.6, 1.8), (0.7, 1.6), (0.7, 1.8), (0.8, 1.4), (0.8, 1.6), (0.8, 1.8)]
        .iter()
        .map(|&(h, b)| vec![b, h, 0.3])
        .collect();
    let ou_betas = [1.2, 1.4, 1.6, 1.8];
    let ou_lambdas = [0.25, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5];
    let mut cfg = match table {
        1 | 2 => StudyConfig::new(FamilyId::LfsmInc, lfsm_cells, vec![if table == 1 { 1000 } else { 10_000 }]),
        3 | 4 => {
            let mut c = StudyConfig::new(FamilyId::Ou, grid_cells(&ou_betas, &ou_lambdas, |b, l| vec![b, l, 1.0]), vec![1000, 10_000]);
            c.free = Some(vec![true, true, false]);
            c.m = Some(if table == 3 { 1 } else { 2 });
            c.nu = Some(1.0);
            c.nodes_per_dim = Some(20);
            c
        }
        5 => {
            let cells: Vec<Vec<f64>> = [1.4, 1.6]
                .iter()
                .flat_map(|&b| [0.25, 0.75].iter().flat_map(move |&l| [0.9, 1.0].iter().map(move |&s| vec![b, l, s])))
                .collect();
            let mut c = StudyConfig::new(FamilyId::Ou, cells, vec![10_000]);
            c.m = Some(2);
            c
        }
        6 | 7 => {
            let sigma = if table == 6 { 0.5 } else { 2.0 };
            StudyConfig::new(FamilyId::GeneralizedModulatedOu, vec![vec![1.8, 0.5, sigma], vec![1.2, 0.5, sigma]], vec![10_000])
        }
        _ => return Err(Error::Config(format!("unknown preset {table}, expected 1..=7"))),
    };
    if !full {
        if let TruthList::Many(v) = &mut cfg.xi0 {
            v.truncate(SMOKE_CELLS);
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_defaults() {
        let c = StudyConfig::from_json(r#"{"family":"ou","xi0":[1.8,1.0,1.0],"n":[100],"free":[true,true,false],"m":1}"#).unwrap();
        assert_eq!(c.reps, DEFAULT_REPS);
        assert_eq!(c.truths().len(), 1);
        assert_eq!(c.start_for(&c.truths()[0]).to_vec(), vec![1.5, 0.5, 1.0]);
        c.validate().unwrap();
        let many = StudyConfig::from_json(r#"{"family":"ou","xi0":[[1.8,1.0,1.0],[1.2,0.5,1.0]],"n":[100]}"#).unwrap();
        assert_eq!(many.truths().len(), 2);
        let back = StudyConfig::from_json(&serde_json::to_string(&many).unwrap()).unwrap();
        assert_eq!(back, many);
    }

    #[test]
    fn config_validation() {
        let mut c = StudyConfig::new(FamilyId::Ou, vec![vec![1.8, 1.0, 1.0]], vec![100]);
        c.reps = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.reps = 5;
        c.free = Some(vec![true, false]);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.free = None;
        c.xi0 = TruthList::One(vec![2.5, 1.0, 1.0]);
        assert!(c.validate().is_err());
        assert!(StudyConfig::from_json(r#"{"family":"nope","xi0":[1],"n":[1]}"#).is_err());
        assert!(StudyConfig::from_json(r#"{"family":"ou","xi0":[1.5,1,1],"n":[10],"bogus":1}"#).is_err());
    }

    #[test]
    fn summary_statistics() {
        let e = vec![vec![1.0, 2.0], vec![3.0, 2.0]];
        let (b, s) = summarize(&e, &[1.5, 2.5], &[0, 1]);
        assert_eq!(b, vec![0.5, 0.5]);
        assert!((s[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s[1], 0.0);
        let (b1, s1) = summarize(&e[..1], &[1.5, 2.5], &[0]);
        assert_eq!((b1[0], s1[0]), (0.5, 0.0));
    }

    #[test]
    fn presets_are_valid() {
        for t in PRESET_TABLES {
            let smoke = preset(t, false).unwrap();
            smoke.validate().unwrap();
            assert!(smoke.truths().len() <= SMOKE_CELLS);
            preset(t, true).unwrap().validate().unwrap();
        }
        assert_eq!(preset(3, true).unwrap().truths().len(), 28);
        assert_eq!(preset(5, true).unwrap().truths().len(), 8);
        assert!(preset(8, false).is_err());
    }

    #[test]
    fn single_replication_is_degenerate() {
        let mut c = StudyConfig::new(FamilyId::Ou, vec![vec![1.8, 1.0, 1.0]], vec![300]);
        c.reps = 1;
        c.m = Some(1);
        c.free = Some(vec![true, true, false]);
        let r = run_study(&c).unwrap();
        let cell = &r.cells[0];
        assert_eq!(cell.std, vec![0.0, 0.0]);
        if cell.failures == 0 {
            assert!(cell.degenerate);
            let est = &cell.estimates[0];
            assert!((cell.abs_bias[0] - (est[0] - 1.8).abs()).abs() < 1e-15);
        }
        let csv = r.to_csv();
        assert!(csv.starts_with("family,beta0,lambda0,sigma0,n,reps,param,abs_bias,std,failures\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
