//! Sphere fluxes over a sequence of radii, with fitted decay rates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::FieldSampler;
use crate::numeric::fit_line;

use super::plan::{make_surgery_plan, Schedule};
use super::sphere::{flux_sphere_3d, norm3, FluxDecomposition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub radius: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub cap_norm: f64,
    pub cap_bound: f64,
    pub offstrip_norms: Vec<f64>,
    pub strips: Vec<[f64; 3]>,
    pub slices: Vec<[f64; 3]>,
    pub total_norm: f64,
    pub i_max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Log-log slope of the cap bound `sup|T|·4πR(1 − cos ψ₂)` in `R`.
    pub cap_bound_exponent: Option<f64>,
    /// Log-log slope of the cap flux magnitude in `R`.
    pub cap_norm_exponent: Option<f64>,
    /// Per slice, slope of `log |off-strip|` against `R sin ψ₁`.
    pub offstrip_rates: Vec<Option<f64>>,
    /// Largest change of a slice vector between consecutive radii.
    pub slice_differences: Vec<f64>,
    /// Index from which `slice_differences` is non-increasing.
    pub slice_onset: usize,
    /// `|total|` strictly decreasing along the radii.
    pub total_decreasing: bool,
    pub decompositions: Vec<FluxDecomposition>,
}

fn loglog(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly).map(|f| f.slope)
}

pub fn convergence_study(
    sampler: &dyn FieldSampler,
    schedule: Schedule,
    radii: &[f64],
    azimuths: &[f64],
    delta: Option<f64>,
    resolution: f64,
) -> Result<ConvergenceTable> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("radii must be a non-empty increasing list"));
    }
    let mut rows = Vec::new();
    let mut decompositions = Vec::new();
    for &r in radii {
        let plan = make_surgery_plan(r, schedule, azimuths, delta, resolution)?;
        let d = flux_sphere_3d(sampler, &plan)?;
        rows.push(ConvergenceRow {
            radius: r,
            psi1: plan.psi1,
            psi2: plan.psi2,
            cap_norm: d.caps.norm(),
            cap_bound: d.cap_bound,
            offstrip_norms: d.slices.iter().map(|s| s.offstrip.norm()).collect(),
            strips: d.slices.iter().map(|s| s.strip.flux).collect(),
            slices: d.slices.iter().map(|s| s.total).collect(),
            total_norm: d.total_norm(),
            i_max: d.i_max(),
        });
        decompositions.push(d);
    }
    let rs: Vec<f64> = rows.iter().map(|r| r.radius).collect();
    let bounds: Vec<f64> = rows.iter().map(|r| r.cap_bound).collect();
    let caps: Vec<f64> = rows.iter().map(|r| r.cap_norm).collect();
    let slices = rows[0].slices.len();
    let offstrip_rates = (0..slices)
        .map(|k| {
            let xs: Vec<f64> = rows.iter().map(|r| r.radius * r.psi1.sin()).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.offstrip_norms[k]).collect();
            if ys.iter().any(|&y| !(y > 0.0)) {
                return None;
            }
            let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
            fit_line(&xs, &ly).map(|f| f.slope)
        })
        .collect();
    let slice_differences: Vec<f64> = rows
        .windows(2)
        .map(|w| {
            (0..slices)
                .map(|k| norm3(&std::array::from_fn(|c| w[1].slices[k][c] - w[0].slices[k][c])))
                .fold(0.0, f64::max)
        })
        .collect();
    let mut slice_onset = slice_differences.len().saturating_sub(1);
    while slice_onset > 0 && slice_differences[slice_onset] <= slice_differences[slice_onset - 1] {
        slice_onset -= 1;
    }
    let total_decreasing = rows.windows(2).all(|w| w[1].total_norm < w[0].total_norm);
    Ok(ConvergenceTable {
        cap_bound_exponent: loglog(&rs, &bounds),
        cap_norm_exponent: loglog(&rs, &caps),
        offstrip_rates,
        slice_differences,
        slice_onset,
        total_decreasing,
        rows,
        decompositions,
    })
}
