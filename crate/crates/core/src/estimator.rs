//! Weighted L² contrast between empirical and theoretical characteristic
//! functions and its Nelder–Mead minimisation.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::charfn::{empirical_cf_unchecked, NormMethod, ShiftNorm};
use crate::error::{Error, Result};
use crate::kernels::{FamilyId, KernelModel, ParameterPoint};
use crate::quadrature::gauss_laguerre;

/// Gaussian weight `w_ν` on `R^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub nu: f64,
    pub m: usize,
}

impl WeightSpec {
    pub fn new(nu: f64, m: usize) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Argument(format!("weight width nu must be positive, got {nu}")));
        }
        if m == 0 {
            return Err(Error::Argument("window length m must be at least 1".into()));
        }
        Ok(Self { nu, m })
    }
}

/// `w_ν(u) = (2πν²)^{-m/2} exp(-‖u‖² / (2ν²))`.
pub fn gaussian_weight(spec: &WeightSpec, u: &[f64]) -> f64 {
    let nu2 = spec.nu * spec.nu;
    let r2: f64 = u.iter().map(|x| x * x).sum();
    (2.0 * std::f64::consts::PI * nu2).powf(-(u.len() as f64) / 2.0) * (-r2 / (2.0 * nu2)).exp()
}

/// Tensor Gauss–Laguerre grid on `R_+^m` carrying the weight `w_ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub m: usize,
    /// Node coordinates, `m` per node.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, q: usize) -> &[f64] {
        &self.nodes[q * self.m..(q + 1) * self.m]
    }

    /// `Σ_q w_q h(u_q)`.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut h: F) -> f64 {
        (0..self.len()).map(|q| self.weights[q] * h(self.node(q))).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { m: self.m, nodes: self.nodes.clone(), weights: self.weights.iter().map(|w| w * c).collect() }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let cols: Vec<String> = (1..=self.m).map(|k| format!("u{k}")).collect();
        writeln!(w, "{},weight", cols.join(","))?;
        for q in 0..self.len() {
            let coords: Vec<String> = self.node(q).iter().map(|x| x.to_string()).collect();
            writeln!(w, "{},{}", coords.join(","), self.weights[q])?;
        }
        Ok(())
    }
}

/// Tensor product of `nodes_per_dim`-point Gauss–Laguerre rules. Node `x`
/// is mapped to `u = s x` with `s = min(ν, 1)` and gets weight
/// `Π_k s λ_k e^{x_k} · w_ν(u)`, so that `Σ_q w_q h(u_q) ≈ ∫ h w_ν`.
pub fn build_grid(m: usize, nodes_per_dim: usize, spec: &WeightSpec) -> Result<QuadratureGrid> {
    if m == 0 || m != spec.m {
        return Err(Error::Argument(format!("grid dimension {m} does not match weight dimension {}", spec.m)));
    }
    let (x, lam) = gauss_laguerre(nodes_per_dim)?;
    let s = spec.nu.min(1.0);
    let w1: Vec<f64> = x.iter().zip(&lam).map(|(x, l)| s * (x + l.ln()).exp()).collect();
    let total = nodes_per_dim.pow(m as u32);
    let mut nodes = Vec::with_capacity(total * m);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; m];
    let mut u = vec![0.0; m];
    for _ in 0..total {
        let mut w = 1.0;
        for k in 0..m {
            u[k] = s * x[idx[k]];
            w *= w1[idx[k]];
        }
        nodes.extend_from_slice(&u);
        weights.push(w * gaussian_weight(spec, &u));
        // Last coordinate varies fastest.
        for k in (0..m).rev() {
            idx[k] += 1;
            if idx[k] < nodes_per_dim {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(QuadratureGrid { m, nodes, weights })
}

/// Default design per family: `(m, nodes per dimension, ν)`.
pub fn default_design(family: FamilyId) -> (usize, usize, f64) {
    match family {
        FamilyId::LfsmInc => (3, 12, 10.0),
        FamilyId::GeneralizedModulatedOu => (2, 20, 0.1),
        _ => (2, 20, 1.0),
    }
}

/// `φ_n` at every grid node.
pub fn empirical_cf_on_grid(values: &[f64], grid: &QuadratureGrid) -> Result<Vec<f64>> {
    if values.len() < grid.m {
        return Err(Error::Argument(format!(
            "path of length {} is shorter than the window {}",
            values.len(),
            grid.m
        )));
    }
    Ok((0..grid.len()).map(|q| empirical_cf_unchecked(values, grid.node(q))).collect())
}

/// `φ_ξ` at every grid node.
pub fn theoretical_cf_on_grid(
    model: &KernelModel,
    xi: &ParameterPoint,
    grid: &QuadratureGrid,
    method: NormMethod,
) -> Result<Vec<f64>> {
    let norm = ShiftNorm::window(model, xi, grid.m, method)?;
    (0..grid.len())
        .map(|q| {
            let v = norm.cf(grid.node(q));
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Model("characteristic function is not finite".into()))
            }
        })
        .collect()
}

fn contrast_with(emp: &[f64], model: &KernelModel, xi: &ParameterPoint, grid: &QuadratureGrid, method: NormMethod) -> f64 {
    if !model.is_admissible(xi) {
        return f64::INFINITY;
    }
    let Ok(norm) = ShiftNorm::window(model, xi, grid.m, method) else {
        return f64::INFINITY;
    };
    let mut s = 0.0;
    for q in 0..grid.len() {
        let d = emp[q] - norm.cf(grid.node(q));
        s += grid.weights[q] * d * d;
    }
    if s.is_nan() {
        f64::INFINITY
    } else {
        s
    }
}

/// `F = Σ_q w_q (φ_n(u_q) - φ_ξ(u_q))²`; `+∞` for inadmissible `ξ`.
pub fn contrast(emp: &[f64], model: &KernelModel, xi: &ParameterPoint, grid: &QuadratureGrid) -> Result<f64> {
    if emp.len() != grid.len() {
        return Err(Error::Argument(format!(
            "{} empirical values for a grid of {} nodes",
            emp.len(),
            grid.len()
        )));
    }
    Ok(contrast_with(emp, model, xi, grid, NormMethod::Auto))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    /// Relative simplex diameter below which the search stops.
    pub tol: f64,
    /// Defaults to `500 (d + 1)`.
    pub max_iter: Option<usize>,
    /// Initial edge length as a fraction of `max |x_i|`.
    pub initial_step: f64,
    /// Fresh simplices built around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: None, initial_step: 0.1, restarts: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub diameter: f64,
}

/// Nelder–Mead simplex search with coefficients (1, 2, 1/2, 1/2).
///
/// Vertices are kept sorted by value with a stable sort, so ties resolve to
/// the earlier vertex and runs are bit-reproducible. Non-finite objective
/// values count as `+∞`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, start: &[f64], opts: &NelderMeadOptions) -> Result<MinimizeResult> {
    let d = start.len();
    if d == 0 {
        return Err(Error::Argument("nothing to minimise: empty start vector".into()));
    }
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let f0 = eval(start, &mut evals);
    if !f0.is_finite() {
        return Err(Error::Argument("objective is not finite at the start point".into()));
    }
    let max_iter = opts.max_iter.unwrap_or(500 * (d + 1));
    let mut best = nm_run(&mut eval, &mut evals, start, f0, opts, max_iter)?;
    let mut iterations = best.iterations;
    for _ in 0..opts.restarts {
        if iterations >= max_iter {
            break;
        }
        let r = nm_run(&mut eval, &mut evals, &best.x.clone(), best.value, opts, max_iter - iterations)?;
        iterations += r.iterations;
        let gain = best.value - r.value;
        if r.value <= best.value {
            best = r;
        }
        if gain <= 1e-12 * best.value.abs() {
            break;
        }
    }
    best.iterations = iterations;
    best.evaluations = evals;
    Ok(best)
}

fn nm_run<E: FnMut(&[f64], &mut usize) -> f64>(
    eval: &mut E,
    evals: &mut usize,
    start: &[f64],
    f0: f64,
    opts: &NelderMeadOptions,
    max_iter: usize,
) -> Result<MinimizeResult> {
    let d = start.len();
    let scale = start.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let step = if scale > 0.0 { opts.initial_step * scale } else { opts.initial_step };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.to_vec(), f0));
    for i in 0..d {
        let mut x = start.to_vec();
        x[i] += step;
        let v = eval(&x, evals);
        simplex.push((x, v));
    }
    let diameter = |s: &[(Vec<f64>, f64)]| {
        let b = &s[0].0;
        s[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(b).map(|(xi, bi)| (xi - bi).abs() / bi.abs().max(1.0)))
            .fold(0.0f64, f64::max)
    };
    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diam = diameter(&simplex);
        if diam < opts.tol || iterations >= max_iter {
            let all_finite = simplex.iter().all(|(_, v)| v.is_finite());
            return Ok(MinimizeResult {
                x: simplex[0].0.clone(),
                value: simplex[0].1,
                iterations,
                evaluations: *evals,
                converged: diam < opts.tol && all_finite,
                diameter: diam,
            });
        }
        iterations += 1;
        let mut c = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for j in 0..d {
                c[j] += x[j] / d as f64;
            }
        }
        let (fb, fsw, fw) = (simplex[0].1, simplex[d - 1].1, simplex[d].1);
        let xw = simplex[d].0.clone();
        let lerp = |t: f64| -> Vec<f64> { (0..d).map(|j| c[j] + t * (xw[j] - c[j])).collect() };
        let xr = lerp(-1.0);
        let fr = eval(&xr, evals);
        if fr < fb {
            let xe = lerp(-2.0);
            let fe = eval(&xe, evals);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < fsw {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < fw {
            let xc = lerp(-0.5);
            let fc = eval(&xc, evals);
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = lerp(0.5);
            let fc = eval(&xc, evals);
            let ok = fc < fw;
            (xc, fc, ok)
        };
        if accept {
            simplex[d] = (xc, fc);
            continue;
        }
        let xb = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = (0..d).map(|j| xb[j] + 0.5 * (v.0[j] - xb[j])).collect();
            let fx = eval(&x, evals);
            *v = (x, fx);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub xi_hat: ParameterPoint,
    pub contrast_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub simplex_diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Coordinates of `(β, θ)` that are optimised; the others stay at the
    /// start value. `None` frees everything.
    pub free: Option<Vec<bool>>,
    pub nelder_mead: NelderMeadOptions,
    #[serde(skip)]
    pub method: NormMethod,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { free: None, nelder_mead: NelderMeadOptions::default(), method: NormMethod::Auto }
    }
}

/// Minimises the contrast against precomputed `φ_n` node values.
pub fn estimate_from_cf(
    emp: &[f64],
    model: &KernelModel,
    grid: &QuadratureGrid,
    start: &ParameterPoint,
    opts: &EstimateOptions,
) -> Result<EstimationResult> {
    if emp.len() != grid.len() {
        return Err(Error::Argument("empirical values are not aligned with the grid".into()));
    }
    model.check(start).map_err(|e| Error::Argument(format!("start point not admissible: {e}")))?;
    let full = start.to_vec();
    let free: Vec<bool> = match &opts.free {
        Some(mask) if mask.len() != full.len() => {
            return Err(Error::Config(format!(
                "free mask has {} entries, {} has {} parameters",
                mask.len(),
                model.family,
                full.len()
            )))
        }
        Some(mask) => mask.clone(),
        None => vec![true; full.len()],
    };
    let idx: Vec<usize> = (0..full.len()).filter(|&i| free[i]).collect();
    if idx.is_empty() {
        return Err(Error::Config("no free parameters".into()));
    }
    let assemble = |z: &[f64]| {
        let mut v = full.clone();
        for (k, &i) in idx.iter().enumerate() {
            v[i] = z[k];
        }
        ParameterPoint::from_slice(&v)
    };
    let z0: Vec<f64> = idx.iter().map(|&i| full[i]).collect();
    let r = nelder_mead(|z| contrast_with(emp, model, &assemble(z), grid, opts.method), &z0, &opts.nelder_mead)?;
    Ok(EstimationResult {
        xi_hat: assemble(&r.x),
        contrast_value: r.value,
        iterations: r.iterations,
        evaluations: r.evaluations,
        converged: r.converged,
        simplex_diameter: r.diameter,
    })
}

/// Minimal contrast estimate from an observed path.
pub fn estimate(
    values: &[f64],
    model: &KernelModel,
    grid: &QuadratureGrid,
    start: &ParameterPoint,
    opts: &EstimateOptions,
) -> Result<EstimationResult> {
    let emp = empirical_cf_on_grid(values, grid)?;
    estimate_from_cf(&emp, model, grid, start, opts)
}

/// Gram matrix `M_ij = ⟨∂_i φ_ξ, ∂_j φ_ξ⟩_w` of the parameter derivatives
/// of the characteristic function, by central differences with relative
/// step `fd_step`.
pub fn gram_hessian(model: &KernelModel, xi: &ParameterPoint, grid: &QuadratureGrid, fd_step: f64) -> Result<DMatrix<f64>> {
    model.check(xi)?;
    let x = xi.to_vec();
    let d = x.len();
    let mut grads: Vec<Vec<f64>> = Vec::with_capacity(d);
    for i in 0..d {
        let h = fd_step * x[i].abs().max(1e-3);
        let mut up = x.clone();
        let mut dn = x.clone();
        up[i] += h;
        dn[i] -= h;
        let (pu, pd) = (ParameterPoint::from_slice(&up), ParameterPoint::from_slice(&dn));
        if !model.is_admissible(&pu) || !model.is_admissible(&pd) {
            return Err(Error::Domain(format!(
                "{} is within one difference step of the boundary in coordinate {}",
                model.family,
                model.param_names()[i]
            )));
        }
        let fu = theoretical_cf_on_grid(model, &pu, grid, NormMethod::Auto)?;
        let fd = theoretical_cf_on_grid(model, &pd, grid, NormMethod::Auto)?;
        grads.push(fu.iter().zip(&fd).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v: f64 = (0..grid.len()).map(|q| grid.weights[q] * grads[i][q] * grads[j][q]).sum();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Smallest eigenvalue divided by the trace of the sub-block on `idx`.
pub fn relative_min_eigenvalue(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    let b = DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
    let tr = b.trace();
    let eig = SymmetricEigen::new(b);
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min) / tr
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weight_examples() {
        let s1 = WeightSpec::new(1.0, 1).unwrap();
        assert_relative_eq!(gaussian_weight(&s1, &[0.0]), (2.0 * std::f64::consts::PI).powf(-0.5), max_relative = 1e-15);
        let s2 = WeightSpec::new(1.0, 2).unwrap();
        assert_relative_eq!(
            gaussian_weight(&s2, &[1.0, 1.0]),
            (-1.0f64).exp() / (2.0 * std::f64::consts::PI),
            max_relative = 1e-15
        );
        let s3 = WeightSpec::new(2.5, 2).unwrap();
        let u = [0.7, 1.9];
        assert_relative_eq!(
            gaussian_weight(&s3, &u),
            2.5f64.powi(-2) * gaussian_weight(&s2, &[0.7 / 2.5, 1.9 / 2.5]),
            max_relative = 1e-14
        );
    }

    #[test]
    fn orthant_mass() {
        for (m, nu, nodes) in [(1, 1.0, 20), (2, 1.0, 20), (2, 0.1, 20), (3, 10.0, 12)] {
            let g = build_grid(m, nodes, &WeightSpec::new(nu, m).unwrap()).unwrap();
            let s: f64 = g.weights.iter().sum();
            assert!((s - 0.5f64.powi(m as i32)).abs() < 1e-3, "m={m} nu={nu}: {s}");
        }
    }

    #[test]
    fn grid_rejects_oversized_rule() {
        assert!(build_grid(1, 65, &WeightSpec::new(1.0, 1).unwrap()).is_err());
    }

    #[test]
    fn quadratic_bowl() {
        let target = [0.3, -1.2, 2.0];
        let r = nelder_mead(
            |x| x.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum(),
            &[0.6, -0.9, 2.3],
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn penalty_wall_returns_start() {
        let start = [1.0, 2.0];
        let r = nelder_mead(|x| if x == start { 1.0 } else { f64::INFINITY }, &start, &NelderMeadOptions::default()).unwrap();
        assert_eq!(r.x, start.to_vec());
        assert!(!r.converged);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        assert!(nelder_mead(|_| f64::NAN, &[1.0], &NelderMeadOptions::default()).is_err());
    }

    #[test]
    fn contrast_is_zero_at_truth_and_infinite_outside() {
        let model = KernelModel::new(FamilyId::Ou);
        let xi = ParameterPoint::new(1.5, vec![1.0, 1.0]);
        let grid = build_grid(2, 8, &WeightSpec::new(1.0, 2).unwrap()).unwrap();
        let phi = theoretical_cf_on_grid(&model, &xi, &grid, NormMethod::Auto).unwrap();
        assert!(contrast(&phi, &model, &xi, &grid).unwrap() < 1e-16);
        let bad = ParameterPoint::new(1.5, vec![-1.0, 1.0]);
        assert_eq!(contrast(&phi, &model, &bad, &grid).unwrap(), f64::INFINITY);
        assert!(contrast(&phi[1..], &model, &xi, &grid).is_err());
    }

    #[test]
    fn contrast_is_quadratic_in_one_node() {
        let model = KernelModel::new(FamilyId::Ou);
        let xi = ParameterPoint::new(1.5, vec![1.0, 1.0]);
        let grid = build_grid(1, 6, &WeightSpec::new(1.0, 1).unwrap()).unwrap();
        let phi = theoretical_cf_on_grid(&model, &xi, &grid, NormMethod::Auto).unwrap();
        let mut emp: Vec<f64> = phi.iter().map(|p| p + 0.01).collect();
        let f0 = contrast(&emp, &model, &xi, &grid).unwrap();
        emp[2] += 0.003;
        let f1 = contrast(&emp, &model, &xi, &grid).unwrap();
        assert_relative_eq!(f1 - f0, grid.weights[2] * (2.0 * 0.01 * 0.003 + 0.003 * 0.003), max_relative = 1e-9);
    }

    #[test]
    fn single_window_path_is_legal() {
        let model = KernelModel::new(FamilyId::Ou);
        let grid = build_grid(2, 6, &WeightSpec::new(1.0, 2).unwrap()).unwrap();
        let start = ParameterPoint::new(1.5, vec![0.5, 1.0]);
        let opts = EstimateOptions { free: Some(vec![true, true, false]), ..Default::default() };
        let r = estimate(&[0.3, -0.2], &model, &grid, &start, &opts).unwrap();
        assert_eq!(r.xi_hat.theta[1], 1.0);
        assert!(estimate(&[0.3], &model, &grid, &start, &opts).is_err());
    }
}
