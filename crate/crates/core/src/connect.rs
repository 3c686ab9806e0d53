//! Heteroclinic connections `U_ij` between pairs of wells.
//!
//! A connection solves `Ü − ∇W(U) = 0` on `[−L, L]` with `U(−L) = a_i`,
//! `U(L) = a_j`. It is found by minimising the discretised action
//!
//! ```text
//! S_h(U) = Σ_k ½|U_{k+1} − U_k|² / h + Σ_k h W(U_k)
//! ```
//!
//! by gradient descent in the discrete `H¹` metric `h(−D² + c)`, with an
//! Armijo backtracking line search. Once the residual is small, Newton steps
//! on the discrete Euler–Lagrange system are tried first and accepted under
//! the same line search, so the action never increases. The gradient of `S_h` at interior node
//! `k` is `−h r_k` where `r_k = (U_{k+1} − 2U_k + U_{k−1})/h² − ∇W(U_k)` is
//! the discrete Euler–Lagrange residual, so a stationary point is exactly a
//! discrete solution of the connection equation.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{solve_block_tridiagonal, solve_constant_tridiagonal};
use crate::potential::TripleWellSpec;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionParams {
    /// Half-length `L` of the truncated line.
    pub half_length: f64,
    /// Number of samples `N` (including both pinned endpoints).
    pub samples: usize,
    /// Target sup-norm of the discrete Euler–Lagrange residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Return the constant path when `i == j` instead of an error.
    #[serde(default)]
    pub allow_trivial: bool,
}

impl Default for ConnectionParams {
    fn default() -> Self {
        Self {
            half_length: 12.0,
            samples: 801,
            tolerance: 1e-8,
            max_iterations: 20_000,
            allow_trivial: false,
        }
    }
}

/// Diagnostics from the descent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DescentLog {
    pub iterations: usize,
    /// Discrete action `S_h` after every accepted step (first entry is the seed).
    pub actions: Vec<f64>,
    pub el_residual: f64,
}

/// A discretised connection on a uniform grid of `[−L, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionPath {
    pub half_length: f64,
    pub values: Vec<Vec3>,
    /// Indices `(i, j)` of the wells at `−L` and `+L`.
    pub endpoints: (usize, usize),
    /// Action `σ_ij`.
    pub action: f64,
    pub equipartition_residual: f64,
    /// sup |U(±L) − a_{i,j}|.
    pub endpoint_error: f64,
    #[serde(default)]
    pub log: DescentLog,
}

impl ConnectionPath {
    /// Builds a path from samples and fills in its action and residuals.
    pub fn from_samples(spec: &TripleWellSpec, half_length: f64, values: Vec<Vec3>, endpoints: (usize, usize)) -> Result<Self> {
        if values.len() < 3 {
            return Err(invalid("a path needs at least 3 samples"));
        }
        if !(half_length > 0.0) {
            return Err(invalid("half length must be positive"));
        }
        let mut path = Self {
            half_length,
            values,
            endpoints,
            action: 0.0,
            equipartition_residual: 0.0,
            endpoint_error: 0.0,
            log: DescentLog::default(),
        };
        path.refresh(spec)?;
        Ok(path)
    }

    fn refresh(&mut self, spec: &TripleWellSpec) -> Result<()> {
        self.action = action(spec, self)?;
        self.equipartition_residual = equipartition_residual(spec, self)?;
        let (i, j) = self.endpoints;
        let first = self.values[0];
        let last = *self.values.last().unwrap();
        self.endpoint_error = (first - spec.minimum(i)?).norm().max((last - spec.minimum(j)?).norm());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / (self.values.len() - 1) as f64
    }

    pub fn eta(&self, k: usize) -> f64 {
        -self.half_length + k as f64 * self.spacing()
    }

    /// Second-order finite-difference derivative at every sample.
    pub fn derivatives(&self) -> Vec<Vec3> {
        let n = self.values.len();
        let h = self.spacing();
        let u = &self.values;
        (0..n)
            .map(|k| {
                if k == 0 {
                    (4.0 * (u[1] - u[0]) - (u[2] - u[0])) / (2.0 * h)
                } else if k == n - 1 {
                    (4.0 * (u[n - 1] - u[n - 2]) - (u[n - 1] - u[n - 3])) / (2.0 * h)
                } else {
                    (u[k + 1] - u[k - 1]) / (2.0 * h)
                }
            })
            .collect()
    }

    /// The same connection traversed backwards (`U_ji(η) = U_ij(−η)`).
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            values,
            endpoints: (self.endpoints.1, self.endpoints.0),
            ..self.clone()
        }
    }

    /// Applies a linear map to every sample (used for symmetry-related copies).
    pub fn mapped(&self, map: &crate::Mat3, endpoints: (usize, usize)) -> Self {
        Self {
            values: self.values.iter().map(|u| map * u).collect(),
            endpoints,
            ..self.clone()
        }
    }

    /// Cubic Hermite interpolant of the profile; constant beyond `±L`.
    pub fn interpolator(&self) -> ProfileInterpolator {
        ProfileInterpolator {
            half_length: self.half_length,
            spacing: self.spacing(),
            values: self.values.clone(),
            slopes: self.derivatives(),
        }
    }

    /// Discrete Euler–Lagrange residual `sup_k |D²U_k − ∇W(U_k)|`.
    pub fn el_residual(&self, spec: &TripleWellSpec) -> f64 {
        el_residual(spec, &self.values, self.spacing())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "# i={},j={},sigma={:.17e},equipartition_residual={:.17e},el_residual={:.17e},endpoint_error={:.17e},half_length={:.17e},iterations={}",
            self.endpoints.0,
            self.endpoints.1,
            self.action,
            self.equipartition_residual,
            self.log.el_residual,
            self.endpoint_error,
            self.half_length,
            self.log.iterations
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eta", "u1", "u2", "u3"])?;
        for (k, u) in self.values.iter().enumerate() {
            w.write_record(&[
                format!("{:.17e}", self.eta(k)),
                format!("{:.17e}", u[0]),
                format!("{:.17e}", u[1]),
                format!("{:.17e}", u[2]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, spec: &TripleWellSpec) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let file = std::fs::File::open(path)?;
        let mut reader = std::io::BufReader::new(file);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header.trim().strip_prefix('#').ok_or_else(|| bad("missing metadata line"))?;
        let mut meta = std::collections::HashMap::new();
        for kv in header.trim().split(',') {
            if let Some((k, v)) = kv.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let get = |k: &str| meta.get(k).ok_or_else(|| bad(&format!("missing key {k}")));
        let i: usize = get("i")?.parse().map_err(|_| bad("bad i"))?;
        let j: usize = get("j")?.parse().map_err(|_| bad("bad j"))?;
        let half_length: f64 = get("half_length")?.parse().map_err(|_| bad("bad half_length"))?;
        let el: f64 = get("el_residual")?.parse().map_err(|_| bad("bad el_residual"))?;
        let iterations: usize = get("iterations")?.parse().map_err(|_| bad("bad iterations"))?;
        let mut rdr = csv::Reader::from_reader(reader);
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(bad("expected 4 columns"));
            }
            let f = |c: usize| rec[c].trim().parse::<f64>().map_err(|_| bad("bad number"));
            values.push(Vec3::new(f(1)?, f(2)?, f(3)?));
        }
        let mut p = Self::from_samples(spec, half_length, values, (i, j))?;
        p.log.el_residual = el;
        p.log.iterations = iterations;
        Ok(p)
    }
}

/// Cubic Hermite evaluation of a sampled profile and its derivative.
#[derive(Debug, Clone)]
pub struct ProfileInterpolator {
    half_length: f64,
    spacing: f64,
    values: Vec<Vec3>,
    slopes: Vec<Vec3>,
}

impl ProfileInterpolator {
    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Returns `(U(η), U̇(η))`.
    #[inline]
    pub fn eval(&self, eta: f64) -> (Vec3, Vec3) {
        let n = self.values.len();
        if eta <= -self.half_length {
            return (self.values[0], Vec3::zeros());
        }
        if eta >= self.half_length {
            return (self.values[n - 1], Vec3::zeros());
        }
        let s = (eta + self.half_length) / self.spacing;
        let k = (s.floor() as usize).min(n - 2);
        let t = s - k as f64;
        let h = self.spacing;
        let (p0, p1) = (&self.values[k], &self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let value = p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        let slope = (p0 * d00 + m0 * d10 + p1 * d01 + m1 * d11) / h;
        (value, slope)
    }
}

fn check_samples(path: &ConnectionPath) -> Result<()> {
    if path.values.len() < 3 {
        return Err(invalid("a path needs at least 3 samples"));
    }
    Ok(())
}

/// Action `σ = ∫ (½|U̇|² + W(U)) dη` by the trapezoidal rule, with `U̇` from
/// second-order finite differences.
pub fn action(spec: &TripleWellSpec, path: &ConnectionPath) -> Result<f64> {
    check_samples(path)?;
    let h = path.spacing();
    let d = path.derivatives();
    let n = path.values.len();
    let mut sum = 0.0;
    for k in 0..n {
        let density = 0.5 * d[k].norm_squared() + spec.w(&path.values[k]);
        let weight = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        sum += weight * density;
    }
    Ok(sum * h)
}

/// `sup` over interior samples of `|½|U̇|² − W(U)|`.
pub fn equipartition_residual(spec: &TripleWellSpec, path: &ConnectionPath) -> Result<f64> {
    check_samples(path)?;
    let d = path.derivatives();
    let n = path.values.len();
    Ok((1..n - 1)
        .map(|k| (0.5 * d[k].norm_squared() - spec.w(&path.values[k])).abs())
        .fold(0.0, f64::max))
}

/// `∫ |U̇|² dη` with the same quadrature as [`action`].
pub fn kinetic_integral(path: &ConnectionPath) -> Result<f64> {
    check_samples(path)?;
    let h = path.spacing();
    let d = path.derivatives();
    let n = d.len();
    Ok(h * d
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 || k == n - 1 { 0.5 } else { 1.0 } * v.norm_squared())
        .sum::<f64>())
}

fn el_residual(spec: &TripleWellSpec, u: &[Vec3], h: f64) -> f64 {
    let n = u.len();
    (1..n - 1)
        .map(|k| ((u[k + 1] - 2.0 * u[k] + u[k - 1]) / (h * h) - spec.grad(&u[k])).norm())
        .fold(0.0, f64::max)
}

/// Discrete action `S_h` minimised by the descent.
pub fn discrete_action(spec: &TripleWellSpec, u: &[Vec3], h: f64) -> f64 {
    let n = u.len();
    let kinetic: f64 = u.windows(2).map(|w| 0.5 * (w[1] - w[0]).norm_squared()).sum::<f64>() / h;
    let potential: f64 = u
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 || k == n - 1 { 0.5 } else { 1.0 } * spec.w(v))
        .sum::<f64>()
        * h;
    kinetic + potential
}

/// Computes the connection from well `i` (at `η = −L`) to well `j` (at `η = L`).
pub fn solve_connection(spec: &TripleWellSpec, i: usize, j: usize, params: &ConnectionParams) -> Result<ConnectionPath> {
    let a = spec.minimum(i)?;
    let b = spec.minimum(j)?;
    if params.samples < 3 {
        return Err(invalid("connection needs at least 3 samples"));
    }
    if !(params.half_length > 0.0) || !(params.tolerance > 0.0) {
        return Err(invalid("half length and tolerance must be positive"));
    }
    let n = params.samples;
    let h = 2.0 * params.half_length / (n - 1) as f64;
    if i == j {
        if !params.allow_trivial {
            return Err(invalid(format!("connection requested from well {i} to itself")));
        }
        let mut p = ConnectionPath::from_samples(spec, params.half_length, vec![a; n], (i, j))?;
        p.log.actions.push(0.0);
        return Ok(p);
    }

    let mut u: Vec<Vec3> = (0..n).map(|k| a + (b - a) * (k as f64 / (n - 1) as f64)).collect();
    let shift = spec.max_well_curvature().max(1.0);
    let diag = 2.0 / (h * h) + shift;
    let off = -1.0 / (h * h);

    let interior = n - 2;
    let mut residual = vec![Vec3::zeros(); interior];
    let mut direction = vec![Vec3::zeros(); interior];
    let mut rhs = vec![0.0; interior];
    let mut scratch = Vec::new();
    let mut trial = u.clone();
    let mut blocks = vec![crate::Mat3::zeros(); interior];

    let mut current = discrete_action(spec, &u, h);
    let mut log = DescentLog {
        actions: vec![current],
        ..Default::default()
    };
    let mut step: f64 = 1.0;
    let mut res_norm = f64::INFINITY;

    for iter in 0..=params.max_iterations {
        res_norm = 0.0;
        for k in 1..n - 1 {
            let r = (u[k + 1] - 2.0 * u[k] + u[k - 1]) / (h * h) - spec.grad(&u[k]);
            res_norm = f64::max(res_norm, r.norm());
            residual[k - 1] = r;
        }
        log.iterations = iter;
        if res_norm <= params.tolerance {
            break;
        }
        if iter == params.max_iterations {
            return Err(Error::Convergence {
                stage: "connect",
                iterations: iter,
                residual: res_norm,
            });
        }

        let slack = 1e-14 * (1.0 + current.abs());

        // Near the minimiser, try a Newton step on the Euler–Lagrange system:
        // (−D² + ∂²W(U)) d = r. It is kept only if it lowers the action.
        if res_norm < NEWTON_SWITCH {
            for k in 0..interior {
                blocks[k] = crate::Mat3::identity() * (2.0 / (h * h)) + spec.hess(&u[k + 1]);
                direction[k] = residual[k];
            }
            if solve_block_tridiagonal(&blocks, off, &mut direction) {
                let slope: f64 = -h * residual.iter().zip(&direction).map(|(r, d)| r.dot(d)).sum::<f64>();
                if slope < 0.0 {
                    if let Some(value) = line_search(spec, &u, &mut trial, &direction, h, current, slope, slack, 1.0, 20) {
                        std::mem::swap(&mut u, &mut trial);
                        current = value.0;
                        log.actions.push(current);
                        continue;
                    }
                }
            }
        }

        // Sobolev gradient: direction = (−D² + c)⁻¹ r, componentwise with Dirichlet ends.
        for c in 0..3 {
            for k in 0..interior {
                rhs[k] = residual[k][c];
            }
            solve_constant_tridiagonal(diag, off, &mut rhs, &mut scratch);
            for k in 0..interior {
                direction[k][c] = rhs[k];
            }
        }
        // Directional derivative of S_h along the direction is −h Σ r·d < 0.
        let slope: f64 = -h * residual.iter().zip(&direction).map(|(r, d)| r.dot(d)).sum::<f64>();
        match line_search(spec, &u, &mut trial, &direction, h, current, slope, slack, (2.0 * step).min(4.0), 45) {
            Some((value, accepted)) => {
                std::mem::swap(&mut u, &mut trial);
                current = value;
                step = accepted;
                log.actions.push(value);
            }
            None => {
                return Err(Error::Convergence {
                    stage: "connect (line search)",
                    iterations: iter,
                    residual: res_norm,
                })
            }
        }
    }

    log.el_residual = res_norm;
    let mut path = ConnectionPath::from_samples(spec, params.half_length, u, (i, j))?;
    path.log = log;
    Ok(path)
}

/// Residual below which Newton steps are attempted.
const NEWTON_SWITCH: f64 = 1e-2;

/// Armijo backtracking along `direction` from `u`. On success `trial` holds the
/// accepted iterate; returns its action and the accepted step.
#[allow(clippy::too_many_arguments)]
fn line_search(
    spec: &TripleWellSpec,
    u: &[Vec3],
    trial: &mut [Vec3],
    direction: &[Vec3],
    h: f64,
    current: f64,
    slope: f64,
    slack: f64,
    mut step: f64,
    max_halvings: usize,
) -> Option<(f64, f64)> {
    let n = u.len();
    for _ in 0..=max_halvings {
        for k in 1..n - 1 {
            trial[k] = u[k] + direction[k - 1] * step;
        }
        let value = discrete_action(spec, trial, h);
        if value <= current + 1e-4 * step * slope + slack {
            return Some((value, step));
        }
        step *= 0.5;
    }
    None
}

/// Solves the three pairwise connections `U_12`, `U_23`, `U_31`.
///
/// When the wells are permuted by the rotation through 120° about the `u₃`
/// axis (`a_i ↦ a_{i+1}`), only `U_12` is solved and the other two are its
/// rotated copies, so the triple is exactly symmetric.
pub fn solve_triple(spec: &TripleWellSpec, params: &ConnectionParams) -> Result<[ConnectionPath; 3]> {
    if spec.well_count() != 3 {
        return Err(invalid("solve_triple needs a three-well potential"));
    }
    if let Some(q) = cyclic_symmetry(spec) {
        let u12 = solve_connection(spec, 0, 1, params)?;
        let q2 = q * q;
        let mut u23 = u12.mapped(&q, (1, 2));
        let mut u31 = u12.mapped(&q2, (2, 0));
        u23.refresh(spec)?;
        u31.refresh(spec)?;
        return Ok([u12, u23, u31]);
    }
    let pairs = [(0, 1), (1, 2), (2, 0)];
    let mut out: Vec<ConnectionPath> = Vec::with_capacity(3);
    for (i, j) in pairs {
        out.push(solve_connection(spec, i, j, params)?);
    }
    Ok(out.try_into().expect("three paths"))
}

/// The rotation about the `u₃` axis through the centroid mapping `a_i` to
/// `a_{i+1}`, if the wells are symmetric under it (centroid at the origin).
pub fn cyclic_symmetry(spec: &TripleWellSpec) -> Option<crate::Mat3> {
    if spec.well_count() != 3 || spec.centroid().norm() > 1e-14 {
        return None;
    }
    let q = crate::potential::rotation_z(2.0 * std::f64::consts::PI / 3.0);
    let scale = spec.minima.iter().map(|a| a.norm()).fold(0.0, f64::max);
    (0..3)
        .all(|i| (q * spec.minima[i] - spec.minima[(i + 1) % 3]).norm() <= 1e-12 * scale.max(1.0))
        .then_some(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_path(n: usize, l: f64) -> ConnectionPath {
        let spec = TripleWellSpec::scalar_quartic();
        let h = 2.0 * l / (n - 1) as f64;
        let values = (0..n)
            .map(|k| {
                let eta = -l + k as f64 * h;
                Vec3::new((eta / 2f64.sqrt()).tanh(), 0.0, 0.0)
            })
            .collect();
        ConnectionPath::from_samples(&spec, l, values, (0, 1)).unwrap()
    }

    #[test]
    fn trivial_connection_is_constant() {
        let spec = TripleWellSpec::equilateral();
        let params = ConnectionParams {
            allow_trivial: true,
            samples: 51,
            ..Default::default()
        };
        let p = solve_connection(&spec, 1, 1, &params).unwrap();
        assert!(p.values.iter().all(|u| *u == spec.minima[1]));
        assert_eq!(p.action, 0.0);
        assert_eq!(p.equipartition_residual, 0.0);
    }

    #[test]
    fn same_well_without_trivial_mode_is_rejected() {
        let spec = TripleWellSpec::equilateral();
        assert!(matches!(
            solve_connection(&spec, 0, 0, &ConnectionParams::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn analytic_tanh_action_and_equipartition() {
        let p = tanh_path(801, 12.0);
        let exact = 2.0 * 2f64.sqrt() / 3.0;
        assert!((p.action - exact).abs() < 1e-3, "{}", p.action);
        assert!(p.equipartition_residual <= 1e-3);
    }

    #[test]
    fn perturbed_path_breaks_equipartition() {
        let spec = TripleWellSpec::scalar_quartic();
        let mut p = tanh_path(801, 12.0);
        p.values[400][0] += 0.1;
        let r = equipartition_residual(&spec, &p).unwrap();
        assert!(r > 1e-2, "{r}");
    }

    #[test]
    fn action_is_reversal_invariant() {
        let spec = TripleWellSpec::scalar_quartic();
        let mut p = tanh_path(301, 10.0);
        for (k, v) in p.values.iter_mut().enumerate() {
            v[1] = 0.05 * (k as f64 * 0.1).sin();
        }
        let a = action(&spec, &p).unwrap();
        let b = action(&spec, &p.reversed()).unwrap();
        assert!((a - b).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn short_path_is_rejected() {
        let spec = TripleWellSpec::scalar_quartic();
        let p = ConnectionPath {
            half_length: 1.0,
            values: vec![Vec3::zeros(); 2],
            endpoints: (0, 1),
            action: 0.0,
            equipartition_residual: 0.0,
            endpoint_error: 0.0,
            log: DescentLog::default(),
        };
        assert!(action(&spec, &p).is_err());
        assert!(equipartition_residual(&spec, &p).is_err());
    }

    #[test]
    fn quartic_connection_matches_tanh() {
        let spec = TripleWellSpec::scalar_quartic();
        let params = ConnectionParams::default();
        let p = solve_connection(&spec, 0, 1, &params).unwrap();
        assert!(p.log.el_residual <= params.tolerance);
        assert!(p.el_residual(&spec) <= params.tolerance);
        let err = (0..p.len())
            .map(|k| (p.values[k] - Vec3::new((p.eta(k) / 2f64.sqrt()).tanh(), 0.0, 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "sup error {err}");
        // Monotone descent.
        for w in p.log.actions.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn hermite_interpolant_reproduces_nodes() {
        let p = tanh_path(401, 8.0);
        let it = p.interpolator();
        for k in [0, 13, 200, 399, 400] {
            let (v, _) = it.eval(p.eta(k));
            assert!((v - p.values[k]).norm() < 1e-14);
        }
        let (v, d) = it.eval(0.31);
        assert!((v[0] - (0.31 / 2f64.sqrt()).tanh()).abs() < 1e-4);
        let exact_d = 1.0 / 2f64.sqrt() / (0.31 / 2f64.sqrt()).cosh().powi(2);
        assert!((d[0] - exact_d).abs() < 1e-3);
    }

    #[test]
    fn csv_round_trip() {
        let spec = TripleWellSpec::scalar_quartic();
        let p = tanh_path(41, 6.0);
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("c.csv");
        p.write_csv(&f).unwrap();
        let q = ConnectionPath::read_csv(&f, &spec).unwrap();
        assert_eq!(p.values, q.values);
        assert_eq!(q.endpoints, (0, 1));
        assert!((p.action - q.action).abs() < 1e-15);
    }
}
