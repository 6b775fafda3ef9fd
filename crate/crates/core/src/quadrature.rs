//! Quadrature rules: global adaptive Gauss–Kronrod, Gauss–Legendre,
//! tanh–sinh and Gauss–Laguerre.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

// 15-point Kronrod abscissae on [-1, 1] (non-negative half) with the embedded
// 7-point Gauss rule at the odd indices.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Stopping rule of [`integrate_adaptive`]: the global error estimate must
/// fall below `max(abs, rel * |I|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-11, rel: 1e-11, max_intervals: 20_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
    pub converged: bool,
}

/// One 15-point Gauss–Kronrod panel; returns (Kronrod estimate, |K15 - G7|).
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Global adaptive Gauss–Kronrod integration over the intervals delimited by
/// `breakpoints` (sorted, at least two). The panel with the largest error
/// estimate is bisected until the tolerance is met.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: Tolerance) -> Result<Integral> {
    if breakpoints.len() < 2 {
        return Err(Error::Argument("adaptive quadrature needs at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    // Panels that can no longer be split because of floating point resolution.
    let mut frozen_err = 0.0;
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            if b == a {
                continue;
            }
            return Err(Error::Argument(format!("breakpoints not sorted: {a} > {b}")));
        }
        let (v, e) = gauss_kronrod_15(&f, a, b);
        total += v;
        total_err += e;
        heap.push(Panel { a, b, value: v, error: e });
    }
    let mut intervals = heap.len();
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Numeric("non-finite integrand value".into()));
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(Integral { value: total, abs_error: total_err + frozen_err, intervals, converged: true });
        }
        if intervals >= tol.max_intervals {
            break;
        }
        let Some(p) = heap.pop() else { break };
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) || (p.b - p.a) <= 4.0 * f64::EPSILON * p.a.abs().max(p.b.abs()) {
            frozen_err += p.error;
            total_err -= p.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = gauss_kronrod_15(&f, p.a, mid);
        let (v2, e2) = gauss_kronrod_15(&f, mid, p.b);
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
        intervals += 1;
        if heap.is_empty() {
            break;
        }
    }
    let err = heap.iter().map(|p| p.error).sum::<f64>() + frozen_err;
    if !total.is_finite() {
        return Err(Error::Numeric("non-finite integrand value".into()));
    }
    let converged = err <= tol.abs.max(tol.rel * total.abs());
    Ok(Integral { value: total, abs_error: err, intervals, converged })
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Tanh–sinh rule on [0, 1]. Each node is stored as its distance to both
/// endpoints so that abscissae next to an endpoint keep full relative
/// precision; integrands with algebraic endpoint singularities converge
/// geometrically in the number of nodes.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    /// Distance of the node to the left endpoint.
    pub from_left: Vec<f64>,
    /// Distance of the node to the right endpoint.
    pub from_right: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TanhSinh {
    /// Nodes `t = k h` for `t_min <= t <= t_max` of the substitution
    /// `x = (1 + tanh(π/2 sinh t)) / 2`.
    pub fn new(h: f64, t_min: f64, t_max: f64) -> Self {
        let k_min = (t_min / h).ceil() as i64;
        let k_max = (t_max / h).floor() as i64;
        let mut from_left = Vec::new();
        let mut from_right = Vec::new();
        let mut weights = Vec::new();
        for k in k_min..=k_max {
            let t = k as f64 * h;
            let s = 0.5 * PI * t.sinh();
            let e = (2.0 * s).exp();
            // x = e / (1 + e), 1 - x = 1 / (1 + e)
            let (l, r) = if s < 0.0 {
                let inv = (-2.0 * s).exp();
                (1.0 / (1.0 + inv), inv / (1.0 + inv))
            } else {
                (e / (1.0 + e), 1.0 / (1.0 + e))
            };
            let ch = s.cosh();
            let w = h * 0.25 * PI * t.cosh() / (ch * ch);
            if w > 0.0 && l > 0.0 && r > 0.0 {
                from_left.push(l);
                from_right.push(r);
                weights.push(w);
            }
        }
        Self { from_left, from_right, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let width = b - a;
        let mut s = 0.0;
        for i in 0..self.len() {
            let x = if self.from_left[i] <= 0.5 {
                a + width * self.from_left[i]
            } else {
                b - width * self.from_right[i]
            };
            s += self.weights[i] * f(x);
        }
        s * width
    }
}

/// Largest Gauss–Laguerre rule we build; beyond this the node polishing
/// loses accuracy in double precision.
pub const MAX_LAGUERRE_NODES: usize = 64;

/// Gauss–Laguerre nodes and weights for `∫_0^∞ e^{-x} f(x) dx`.
///
/// Nodes come from the eigenvalues of the Jacobi matrix and are then
/// polished by Newton steps on `L_n`; weights use
/// `w_i = x_i / ((n+1)^2 L_{n+1}(x_i)^2)`.
pub fn gauss_laguerre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > MAX_LAGUERRE_NODES {
        return Err(Error::Argument(format!(
            "Gauss-Laguerre rule supports 1..={MAX_LAGUERRE_NODES} nodes, got {n}"
        )));
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * i as f64 + 1.0
        } else if i + 1 == j {
            j as f64
        } else if j + 1 == i {
            i as f64
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (ln, dln) = laguerre_with_derivative(n, *x);
            let step = ln / dln;
            *x -= step;
            if step.abs() <= 1e-15 * x.abs() {
                break;
            }
        }
        let (ln1, _) = laguerre_with_derivative(n + 1, *x);
        let np1 = (n + 1) as f64;
        weights.push(*x / (np1 * np1 * ln1 * ln1));
    }
    Ok((nodes, weights))
}

/// `(L_n(x), L_n'(x))` by the three-term recurrence.
fn laguerre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p1 = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 - x) * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (p1 - p0) / x)
}
