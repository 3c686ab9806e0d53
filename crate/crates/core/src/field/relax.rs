//! Explicit gradient flow `u ← u + τ (Δ_h u − ∇W(u))` with frozen boundary.
//!
//! The flow is gradient descent with step `τ/h²` on the discrete energy
//!
//! ```text
//! E_h(u) = ½ Σ_edges |u_a − u_b|² + h² Σ_nodes W(u)
//! ```
//!
//! whose gradient has Lipschitz constant at most `h² (8/h² + H)` with `H` a
//! bound on `|∂²W|` over the visited states. Any `τ < 2/(8/h² + H)`
//! therefore decreases `E_h` at every step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::pairwise_sum;
use crate::Vec3;

use super::GridField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxParams {
    /// Explicit step `τ`; `None` picks `safety × stability bound`.
    #[serde(default)]
    pub time_step: Option<f64>,
    #[serde(default = "default_safety")]
    pub safety: f64,
    pub max_steps: usize,
    /// Target for `sup |Δ_h u − ∇W(u)|` over interior nodes.
    pub tolerance: f64,
    /// Steps between energy checkpoints.
    #[serde(default = "default_checkpoint")]
    pub checkpoint_every: usize,
    /// Number of coarser grids (each with twice the spacing) relaxed first to
    /// warm-start the requested grid.
    #[serde(default)]
    pub warm_start_levels: usize,
    /// Tolerance used on the coarse levels.
    #[serde(default)]
    pub warm_start_tolerance: Option<f64>,
    /// Worker threads for the row sweeps (results do not depend on it).
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_safety() -> f64 {
    0.9
}

fn default_checkpoint() -> usize {
    1000
}

fn default_workers() -> usize {
    1
}

impl Default for RelaxParams {
    fn default() -> Self {
        Self {
            time_step: None,
            safety: default_safety(),
            max_steps: 2_000_000,
            tolerance: 1e-6,
            checkpoint_every: default_checkpoint(),
            warm_start_levels: 0,
            warm_start_tolerance: None,
            workers: default_workers(),
        }
    }
}

/// Diagnostics of one relaxation (the finest level when warm-started).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelaxReport {
    pub steps: usize,
    pub time_step: f64,
    pub stability_bound: f64,
    pub converged: bool,
    pub initial_residual: f64,
    pub final_residual: f64,
    /// `(step, sup residual)` at every checkpoint.
    pub residual_history: Vec<(usize, f64)>,
    /// `(step, E_h)` at every checkpoint.
    pub energy_history: Vec<(usize, f64)>,
    /// Largest increase of `E_h` between consecutive checkpoints (≤ 0 when
    /// the energy is non-increasing).
    pub max_energy_increase: f64,
    pub energy_monotone: bool,
    pub initial_bound: f64,
    pub final_bound: f64,
    /// Reports of the coarse warm-start levels, coarsest first.
    #[serde(default)]
    pub warm_start: Vec<RelaxReport>,
}

/// Slack allowed on the energy checkpoints.
const ENERGY_SLACK: f64 = 1e-10;

/// `sup` over interior nodes of `|Δ_h u − ∇W(u)|`.
pub fn pde_residual(field: &GridField) -> f64 {
    field
        .interior()
        .map(|(i, j)| (field.laplacian(i, j) - field.spec.grad(&field.at(i, j))).norm())
        .fold(0.0, f64::max)
}

/// Discrete energy `E_h` (edge sum plus potential sum, pairwise summed).
pub fn discrete_energy(field: &GridField) -> f64 {
    let n = field.n;
    let mut terms = Vec::with_capacity(3 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v = field.at(i, j);
            if i + 1 < n {
                terms.push(0.5 * (field.at(i + 1, j) - v).norm_squared());
            }
            if j + 1 < n {
                terms.push(0.5 * (field.at(i, j + 1) - v).norm_squared());
            }
            terms.push(field.spacing * field.spacing * field.spec.w(&v));
        }
    }
    pairwise_sum(&terms)
}

fn hessian_bound(field: &GridField) -> f64 {
    field
        .values
        .iter()
        .map(|v| field.spec.hess(v).norm())
        .fold(0.0, f64::max)
}

/// One Jacobi sweep: writes `next` and returns (sup residual, sup |u|) of the
/// current iterate and the update respectively.
fn sweep(field: &GridField, next: &mut [Vec3], tau: f64, pool: &rayon::ThreadPool) -> (f64, f64) {
    let n = field.n;
    let inv_h2 = 1.0 / (field.spacing * field.spacing);
    let cur = &field.values;
    let spec = &field.spec;
    pool.install(|| {
        next.par_chunks_mut(n)
            .enumerate()
            .map(|(j, row)| {
                if j == 0 || j == n - 1 {
                    row.copy_from_slice(&cur[j * n..(j + 1) * n]);
                    return (0.0f64, row.iter().map(|v| v.norm()).fold(0.0, f64::max));
                }
                let base = j * n;
                row[0] = cur[base];
                row[n - 1] = cur[base + n - 1];
                let mut res: f64 = 0.0;
                let mut bound = row[0].norm().max(row[n - 1].norm());
                for i in 1..n - 1 {
                    let k = base + i;
                    let u = cur[k];
                    let lap = (cur[k - 1] + cur[k + 1] + cur[k - n] + cur[k + n] - 4.0 * u) * inv_h2;
                    let r = lap - spec.grad(&u);
                    res = res.max(r.norm_squared());
                    let v = u + r * tau;
                    bound = bound.max(v.norm_squared().sqrt());
                    row[i] = v;
                }
                (res.sqrt(), bound)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
    })
}

/// Relaxes `field` towards a discrete steady state of `Δu − ∇W(u) = 0`,
/// holding the boundary nodes fixed.
pub fn relax(field: &GridField, params: &RelaxParams) -> Result<(GridField, RelaxReport)> {
    if !(params.tolerance > 0.0) {
        return Err(invalid("relaxation tolerance must be positive"));
    }
    if params.workers == 0 {
        return Err(invalid("workers must be at least 1"));
    }
    if params.warm_start_levels > 0 && field.n >= 64 {
        return relax_warm(field, params);
    }
    relax_single(field, params)
}

fn relax_warm(field: &GridField, params: &RelaxParams) -> Result<(GridField, RelaxReport)> {
    let coarse_n = field.n / 2;
    let coarse = GridField::from_fn(&field.spec, coarse_n, 2.0 * field.spacing, |x, y| {
        field.interpolate(x, y).expect("coarse grid lies inside the fine grid")
    })?;
    let coarse_params = RelaxParams {
        warm_start_levels: params.warm_start_levels - 1,
        tolerance: params.warm_start_tolerance.unwrap_or(params.tolerance),
        time_step: None,
        ..params.clone()
    };
    let (coarse, coarse_report) = relax(&coarse, &coarse_params)?;
    // Prolongate into the interior; the fine boundary ring keeps its data.
    let mut start = field.clone();
    let n = field.n;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let (x, y) = field.position(i, j);
            if let Some(v) = coarse.interpolate(x, y) {
                start.values[j * n + i] = v;
            }
        }
    }
    let (out, mut report) = relax_single(&start, params)?;
    let mut levels = coarse_report.warm_start.clone();
    levels.push(RelaxReport {
        warm_start: Vec::new(),
        ..coarse_report
    });
    report.warm_start = levels;
    Ok((out, report))
}

fn relax_single(field: &GridField, params: &RelaxParams) -> Result<(GridField, RelaxReport)> {
    let h = field.spacing;
    let mut hess = hessian_bound(field);
    let bound_for = |hb: f64| 2.0 / (8.0 / (h * h) + hb);
    let stability = bound_for(hess);
    let mut tau = match params.time_step {
        Some(t) if !(t > 0.0) => return Err(invalid("time step must be positive")),
        Some(t) if t >= stability => {
            return Err(invalid(format!(
                "time step {t:e} exceeds the stability bound {stability:e}"
            )))
        }
        Some(t) => t,
        None => params.safety * stability,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(params.workers)
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;

    let initial_bound = field.sup_norm();
    let limit = 10.0 * initial_bound.max(1.0);
    let mut current = field.clone();
    let mut next = field.values.clone();
    let mut report = RelaxReport {
        time_step: tau,
        stability_bound: stability,
        initial_bound,
        ..Default::default()
    };
    let mut last_energy = discrete_energy(&current);
    report.energy_history.push((0, last_energy));
    report.max_energy_increase = f64::NEG_INFINITY;
    let every = params.checkpoint_every.max(1);

    let mut step = 0;
    loop {
        let (res, bound) = sweep(&current, &mut next, tau, &pool);
        if step == 0 {
            report.initial_residual = res;
        }
        if !res.is_finite() || bound > limit || !bound.is_finite() {
            return Err(Error::Instability {
                step,
                sup_norm: bound,
                limit,
            });
        }
        let done = res <= params.tolerance;
        if done || step == params.max_steps || (step > 0 && step % every == 0) {
            report.residual_history.push((step, res));
            if step > 0 {
                let e = discrete_energy(&current);
                report.max_energy_increase = report.max_energy_increase.max(e - last_energy);
                report.energy_history.push((step, e));
                last_energy = e;
                // The visited states may leave the region the step was sized for.
                let hb = hessian_bound(&current);
                if hb > hess {
                    hess = hb;
                    let bound = bound_for(hess);
                    report.stability_bound = bound;
                    if tau >= bound {
                        tau = params.safety * bound;
                        report.time_step = tau;
                    }
                }
            }
        }
        if done {
            report.converged = true;
            report.final_residual = res;
            break;
        }
        if step == params.max_steps {
            return Err(Error::Convergence {
                stage: "relax",
                iterations: step,
                residual: res,
            });
        }
        std::mem::swap(&mut current.values, &mut next);
        step += 1;
    }
    report.steps = step;
    if report.energy_history.len() < 2 {
        report.max_energy_increase = 0.0;
    }
    report.energy_monotone = report.max_energy_increase <= ENERGY_SLACK;
    current.residual_norm = report.final_residual;
    report.final_bound = current.sup_norm();
    Ok((current, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connect::{solve_triple, ConnectionParams};
    use crate::field::{init_triod, ExtrudedProfile, ProfileShape, TubeParams};
    use crate::potential::TripleWellSpec;

    #[test]
    fn constant_well_is_a_fixed_point() {
        let spec = TripleWellSpec::equilateral();
        let a = spec.minima[0];
        let f = GridField::from_fn(&spec, 17, 0.5, |_, _| a).unwrap();
        let (g, rep) = relax(&f, &RelaxParams::default()).unwrap();
        assert_eq!(rep.steps, 0);
        assert!(g.values.iter().all(|v| *v == a));
    }

    #[test]
    fn extruded_tanh_residual_is_second_order() {
        let spec = TripleWellSpec::scalar_quartic();
        let p = ExtrudedProfile::new(&spec, ProfileShape::Tanh, 0.0);
        let r = |h: f64| {
            let n = (8.0 / h) as usize + 1;
            GridField::from_sampler(&p, n, h).unwrap().residual_norm
        };
        let (r1, r2) = (r(0.2), r(0.1));
        let ratio = r1 / r2;
        assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn oversized_step_is_rejected() {
        let spec = TripleWellSpec::equilateral();
        let f = GridField::from_fn(&spec, 9, 0.1, |x, _| spec.minima[0] * x).unwrap();
        let params = RelaxParams {
            time_step: Some(0.01),
            ..Default::default()
        };
        assert!(matches!(relax(&f, &params), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn small_triod_relaxes_with_monotone_energy_and_is_worker_independent() {
        let spec = TripleWellSpec::equilateral();
        let c = solve_triple(&spec, &ConnectionParams { samples: 401, ..Default::default() }).unwrap();
        let rays = [90f64, 210.0, 330.0].map(f64::to_radians);
        let (f, _) = init_triod(&spec, &c, rays, 65, 0.4, TubeParams::default()).unwrap();
        let params = RelaxParams {
            tolerance: 1e-5,
            checkpoint_every: 200,
            ..Default::default()
        };
        let (g1, rep) = relax(&f, &params).unwrap();
        assert!(rep.converged);
        assert!(rep.energy_monotone, "{}", rep.max_energy_increase);
        assert!(g1.residual_norm <= 1e-5);
        assert!((pde_residual(&g1) - g1.residual_norm).abs() < 1e-12);
        let (g2, _) = relax(&f, &RelaxParams { workers: 3, ..params }).unwrap();
        assert_eq!(g1.values, g2.values);
    }
}
