//! Small numerical kernels shared by the solvers.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels.
#[derive(Debug, Clone)]
pub struct CompositeGauss {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeGauss {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (xs, ws) = gauss_legendre(order);
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for (x, w) in xs.iter().zip(&ws) {
                nodes.push(lo + 0.5 * width * (x + 1.0));
                weights.push(0.5 * width * w);
            }
        }
        Self { nodes, weights }
    }

    /// Rule whose panels are no longer than `max_panel`.
    pub fn with_max_panel(a: f64, b: f64, max_panel: f64, order: usize) -> Self {
        let panels = (((b - a).abs() / max_panel).ceil() as usize).max(1);
        Self::new(a, b, panels, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Pairwise (cascade) summation in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise summation of 3-vectors.
pub fn pairwise_sum3(values: &[[f64; 3]]) -> [f64; 3] {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut acc = [0.0; 3];
        for v in values {
            acc[0] += v[0];
            acc[1] += v[1];
            acc[2] += v[2];
        }
        return acc;
    }
    let mid = values.len() / 2;
    let a = pairwise_sum3(&values[..mid]);
    let b = pairwise_sum3(&values[mid..]);
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        points: n,
    })
}

/// Solves the symmetric tridiagonal system with constant diagonal `diag` and
/// constant off-diagonal `off` in place (Thomas algorithm).
pub fn solve_constant_tridiagonal(diag: f64, off: f64, rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut denom = diag;
    rhs[0] /= denom;
    for k in 1..n {
        scratch[k] = off / denom;
        denom = diag - off * scratch[k];
        rhs[k] = (rhs[k] - off * rhs[k - 1]) / denom;
    }
    for k in (0..n - 1).rev() {
        let next = rhs[k + 1];
        rhs[k] -= scratch[k + 1] * next;
    }
}

/// Solves the block tridiagonal system with 3×3 diagonal blocks `diag[k]` and
/// constant scalar off-diagonal blocks `off·I` in place (block Thomas
/// algorithm). Returns `false` if a pivot block is singular.
pub fn solve_block_tridiagonal(diag: &[Matrix3<f64>], off: f64, rhs: &mut [Vector3<f64>]) -> bool {
    let n = rhs.len();
    assert_eq!(diag.len(), n);
    if n == 0 {
        return true;
    }
    let mut inv: Vec<Matrix3<f64>> = Vec::with_capacity(n);
    let Some(first) = diag[0].try_inverse() else {
        return false;
    };
    inv.push(first);
    rhs[0] = first * rhs[0];
    for k in 1..n {
        let pivot = diag[k] - inv[k - 1] * (off * off);
        let Some(p) = pivot.try_inverse() else {
            return false;
        };
        rhs[k] = p * (rhs[k] - rhs[k - 1] * off);
        inv.push(p);
    }
    for k in (0..n - 1).rev() {
        let next = rhs[k + 1];
        rhs[k] -= inv[k] * next * off;
    }
    true
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

/// Signed angular difference `b − a` wrapped into `(−π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = wrap_angle(b - a);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}
