//! Command line front-end.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::charfn::CovSeriesSpec;
use crate::clt_check::{verify_clt, CltSpec};
use crate::error::{Error, Result};
use crate::estimator::{build_grid, default_design, estimate, EstimateOptions, EstimationResult, WeightSpec};
use crate::harness::{default_start, preset, run_study, StudyConfig};
use crate::kernels::{FamilyId, KernelModel, ParameterPoint};
use crate::oracle::{run_oracle_suite, ORACLE_REL_TOL};
use crate::rng::{rng_from_seed, worker_pool};
use crate::stable_sim::{simulate_path, SamplePath, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stable-mce", version, about = "Minimal contrast estimation for stable moving averages")]
struct Cli {
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true, env = "STABLE_MCE_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a path and write it as a one-column CSV.
    Simulate(SimulateArgs),
    /// Fit a model to a path CSV and print the estimate as JSON.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo study and write the report CSV.
    McStudy(StudyArgs),
    /// Compare closed-form identities with numerical integration.
    CfCheck(CfCheckArgs),
    /// Compare the Monte Carlo covariance of V_n with the series.
    CltCheck(CltArgs),
    /// Write the quadrature grid (node coordinates and weight) as CSV.
    Grid(GridArgs),
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Use the default design of this family.
    #[arg(long)]
    family: Option<FamilyId>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    family: FamilyId,
    /// Order of the LFSM increments.
    #[arg(long)]
    lfsm_order: Option<u32>,
}

impl ModelArgs {
    fn model(&self) -> Result<KernelModel> {
        match (self.family, self.lfsm_order) {
            (FamilyId::LfsmInc, Some(k)) => KernelModel::lfsm(k),
            (_, Some(_)) => Err(Error::Argument("--lfsm-order only applies to lfsm".into())),
            (f, None) => Ok(KernelModel::new(f)),
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Parameters `beta,theta...`; defaults to the family start point.
    #[arg(long)]
    xi: Option<String>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    truncation: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Path CSV with a single column `x`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    start: Option<String>,
    /// Free mask such as `1,1,0`; fixed coordinates stay at the start value.
    #[arg(long)]
    free: Option<String>,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// Study configuration JSON.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in simulation study 1-7.
    #[arg(long)]
    preset: Option<u8>,
    /// Run every cell of a preset instead of the smoke subset.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CfCheckArgs {
    /// Random cases per identity.
    #[arg(long, default_value_t = 50)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct CltArgs {
    #[arg(long, default_value = "ou")]
    family: FamilyId,
    #[arg(long, default_value = "1.5,1,1")]
    xi: String,
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Frequency point, repeatable; `m` comma separated coordinates.
    #[arg(long = "u", default_values = ["0.5", "1"])]
    u: Vec<String>,
    #[arg(long, default_value_t = 4000)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    lag_cut: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Argument(format!("'{t}' is not a number in '{s}'"))))
        .collect()
}

fn parse_mask(s: &str) -> Result<Vec<bool>> {
    s.split(',')
        .map(|t| match t.trim() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            o => Err(Error::Argument(format!("'{o}' is not a mask entry, use 1/0 or true/false"))),
        })
        .collect()
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let model = a.model.model()?;
    let xi = match &a.xi {
        Some(s) => ParameterPoint::from_slice(&parse_list(s)?),
        None => default_start(model.family),
    };
    if xi.len() != model.n_params() {
        return Err(Error::Argument(format!("{} needs {} parameters", model.family, model.n_params())));
    }
    let mut cfg = SimConfig::with_seed(a.seed);
    if let Some(h) = a.grid_step {
        cfg.grid_step = h;
    }
    cfg.truncation = a.truncation;
    let mut rng = rng_from_seed(a.seed);
    let path = simulate_path(&model, &xi, a.n, &cfg, &mut rng)?;
    let mut buf = Vec::new();
    path.write_csv(&mut buf)?;
    emit(a.output.as_ref(), &String::from_utf8_lossy(&buf))
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    family: FamilyId,
    params: &'a [&'static str],
    n: usize,
    #[serde(flatten)]
    result: &'a EstimationResult,
}

fn estimate_cmd(a: &EstimateArgs) -> Result<()> {
    let model = a.model.model()?;
    let path = SamplePath::read_csv(BufReader::new(fs::File::open(&a.input)?))?;
    let (m0, nodes0, nu0) = default_design(model.family);
    let m = a.m.unwrap_or(m0);
    let grid = build_grid(m, a.nodes.unwrap_or(nodes0), &WeightSpec::new(a.nu.unwrap_or(nu0), m)?)?;
    let start = match &a.start {
        Some(s) => ParameterPoint::from_slice(&parse_list(s)?),
        None => default_start(model.family),
    };
    if start.len() != model.n_params() {
        return Err(Error::Argument(format!("{} needs {} start values", model.family, model.n_params())));
    }
    let mut opts = EstimateOptions { free: a.free.as_deref().map(parse_mask).transpose()?, ..Default::default() };
    opts.nelder_mead.restarts = a.restarts;
    let result = estimate(&path.values, &model, &grid, &start, &opts)?;
    let out = EstimateOutput { family: model.family, params: model.param_names(), n: path.n(), result: &result };
    let json = serde_json::to_string_pretty(&out).map_err(|e| Error::Io(e.to_string()))?;
    emit(a.output.as_ref(), &(json + "\n"))
}

fn study(a: &StudyArgs) -> Result<()> {
    let mut cfg = match (&a.config, a.preset) {
        (Some(p), _) => StudyConfig::from_json(&fs::read_to_string(p)?)?,
        (None, Some(t)) => preset(t, a.full)?,
        (None, None) => return Err(Error::Argument("either --config or --preset is required".into())),
    };
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.output.is_some() {
        cfg.output = a.output.clone();
    }
    let report = run_study(&cfg)?;
    for w in report.warnings() {
        eprintln!("warning: {w}");
    }
    emit(cfg.output.as_ref(), &report.to_csv())
}

fn cf_check(a: &CfCheckArgs) -> Result<()> {
    let cases = run_oracle_suite(a.cases, a.seed)?;
    let mut out = io::stdout().lock();
    writeln!(out, "identity,cases,max_rel_error,status")?;
    let mut failed = 0;
    for id in crate::oracle::IDENTITIES {
        let sel: Vec<_> = cases.iter().filter(|c| c.identity == id).collect();
        let worst = sel.iter().map(|c| c.rel_error).fold(0.0, f64::max);
        let ok = sel.iter().all(|c| c.passed());
        failed += usize::from(!ok);
        writeln!(out, "{id},{},{worst:e},{}", sel.len(), if ok { "ok" } else { "FAIL" })?;
    }
    if failed > 0 {
        return Err(Error::Numeric(format!("{failed} identities exceed relative error {ORACLE_REL_TOL:e}")));
    }
    Ok(())
}

fn clt_check(a: &CltArgs) -> Result<()> {
    let model = KernelModel::new(a.family);
    let xi = ParameterPoint::from_slice(&parse_list(&a.xi)?);
    model.check(&xi)?;
    let u: Vec<Vec<f64>> = a.u.iter().map(|s| parse_list(s)).collect::<Result<_>>()?;
    let spec = CltSpec {
        sim: SimConfig::with_seed(a.seed),
        seed: a.seed,
        series: CovSeriesSpec { lag_cut: a.lag_cut, ..Default::default() },
    };
    let report = verify_clt(&model, &xi, &u, a.m, a.n, a.reps, &spec)?;
    for (j, p) in u.iter().enumerate() {
        eprintln!(
            "u={p:?}: mean={:.4} skewness={:.3} excess kurtosis={:.3}",
            report.mean[j], report.skewness[j], report.excess_kurtosis[j]
        );
    }
    emit(a.output.as_ref(), &report.to_csv())
}

fn grid(a: &GridArgs) -> Result<()> {
    let (m0, nodes0, nu0) = a.family.map(default_design).unwrap_or((1, 20, 1.0));
    let m = a.m.unwrap_or(m0);
    let g = build_grid(m, a.nodes.unwrap_or(nodes0), &WeightSpec::new(a.nu.unwrap_or(nu0), m)?)?;
    let mut buf = Vec::new();
    g.write_csv(&mut buf)?;
    emit(a.output.as_ref(), &String::from_utf8_lossy(&buf))
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numeric(_) | Error::Model(_) => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let pool = match worker_pool(cli.workers) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::McStudy(a) => study(a),
        Command::CfCheck(a) => cf_check(a),
        Command::CltCheck(a) => clt_check(a),
        Command::Grid(a) => grid(a),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
