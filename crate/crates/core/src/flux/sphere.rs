//! `(1/R)∮_{∂B_R} Tν dS` over the sphere of radius `R` centred at
//! `(0, 0, 2R)`, split into caps, strips, off-strip slice remainders and
//! (optionally) uncovered gap sectors.
//!
//! Slice frame for a meridian at azimuth `θ`: `e₁ = (sin θ, −cos θ, 0)`,
//! `e₂ = (cos θ, sin θ, 0)`, `e₃`, and `y = x − (0, 0, 2R)` in that frame.
//! Strips use the graph `y₂ = √(R² − y₁² − y₃²)` over `(y₁, ỹ₃ = y₃/R)`,
//! where `(1/R) Tν dS = T (y / y₂) dỹ₃ dy₁`. Off-strip pieces use the circles
//! `y₁ = const`, `y₂ + i y₃ = Rβ e^{iα}`, `β = √(1 − y₁²/R²)`, with
//! `(1/R) dS = dy₁ dα`. Caps use polar angle `t ≤ ψ₂` about each pole.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSampler;
use crate::numeric::{pairwise_sum, pairwise_sum3, CompositeGauss};
use crate::stress::stress_tensor;
use crate::Vec3;

use super::plan::{SliceGeometry, SurgeryPlan, PANEL_ORDER};

/// A flux contribution with the renormalized area `(1/R)∫dS` of its region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionFlux {
    pub flux: [f64; 3],
    pub area: f64,
    pub nodes: usize,
}

impl RegionFlux {
    pub fn norm(&self) -> f64 {
        norm3(&self.flux)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceFlux {
    pub geometry: SliceGeometry,
    /// `ν = (cos θ, sin θ, 0)`, pointing away from the spine along the
    /// interface.
    pub conormal: [f64; 3],
    pub strip: RegionFlux,
    /// Both sides of the strip together.
    pub offstrip: RegionFlux,
    pub total: [f64; 3],
    /// Largest `I_j = (1/R)∫|y_j|/y₂ dy₃` over the strip's `y₁` nodes.
    pub i_max: [f64; 3],
}

impl SliceFlux {
    /// `|v + 2σν| / (2σ)`.
    fn relative(&self, v: &[f64; 3], sigma: f64) -> f64 {
        let d: Vec<f64> = (0..3).map(|k| v[k] + 2.0 * sigma * self.conormal[k]).collect();
        norm3(&[d[0], d[1], d[2]]) / (2.0 * sigma)
    }

    /// Relative distance of the whole slice from `−2σν`.
    pub fn limit_error(&self, sigma: f64) -> f64 {
        self.relative(&self.total, sigma)
    }

    /// Relative distance of the strip alone from `−2σν`.
    pub fn strip_limit_error(&self, sigma: f64) -> f64 {
        self.relative(&self.strip.flux, sigma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxDecomposition {
    pub plan: SurgeryPlan,
    /// Both caps.
    pub caps: RegionFlux,
    /// Largest `|T|_F` at the cap nodes.
    pub cap_sup_tensor: f64,
    /// `4πR(1 − cos ψ₂)`.
    pub cap_area: f64,
    /// `cap_sup_tensor · cap_area`.
    pub cap_bound: f64,
    pub slices: Vec<SliceFlux>,
    pub gaps: Vec<RegionFlux>,
    pub total: [f64; 3],
    /// `|total − (caps + Σ slices + Σ gaps)|_∞`.
    pub partition_error: f64,
    /// Relative mismatch of the summed region areas with `4πR`.
    pub coverage_error: f64,
    /// `R e^{−R sin ψ₁}`.
    pub offstrip_shape: f64,
    pub nodes: usize,
}

impl FluxDecomposition {
    pub fn total_norm(&self) -> f64 {
        norm3(&self.total)
    }

    /// Largest `I_j` over every strip, per `j`.
    pub fn i_max(&self) -> [f64; 3] {
        let mut m = [0.0f64; 3];
        for s in &self.slices {
            for j in 0..3 {
                m[j] = m[j].max(s.i_max[j]);
            }
        }
        m
    }
}

pub(crate) fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Quadrature of one line of nodes.
#[derive(Debug, Clone, Copy)]
struct Line {
    flux: [f64; 3],
    area: f64,
    nodes: usize,
    sup_tensor: f64,
    i: [f64; 3],
}

/// Accumulates `T(x)·m` and the area weights of one line.
struct LineSum<'a> {
    sampler: &'a dyn FieldSampler,
    flux: Vec<[f64; 3]>,
    area: Vec<f64>,
    sup_tensor: f64,
}

impl<'a> LineSum<'a> {
    fn new(sampler: &'a dyn FieldSampler) -> Self {
        Self {
            sampler,
            flux: Vec::new(),
            area: Vec::new(),
            sup_tensor: 0.0,
        }
    }

    fn add(&mut self, x: &Vec3, m: &Vec3, area: f64) -> Result<()> {
        let t = stress_tensor(self.sampler, x)?;
        let f = t * m;
        self.sup_tensor = self.sup_tensor.max(t.norm());
        self.flux.push([f[0], f[1], f[2]]);
        self.area.push(area);
        Ok(())
    }

    fn finish(self, i: [f64; 3]) -> Line {
        Line {
            flux: pairwise_sum3(&self.flux),
            area: pairwise_sum(&self.area),
            nodes: self.flux.len(),
            sup_tensor: self.sup_tensor,
            i,
        }
    }
}

fn run<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<Line> + Sync + Send) -> Result<Vec<Line>> {
    items.par_iter().map(f).collect()
}

fn merge(lines: &[Line]) -> RegionFlux {
    let flux: Vec<[f64; 3]> = lines.iter().map(|l| l.flux).collect();
    let area: Vec<f64> = lines.iter().map(|l| l.area).collect();
    RegionFlux {
        flux: pairwise_sum3(&flux),
        area: pairwise_sum(&area),
        nodes: lines.iter().map(|l| l.nodes).sum(),
    }
}

fn nodes_of(rule: &CompositeGauss) -> Vec<(f64, f64)> {
    rule.nodes.iter().copied().zip(rule.weights.iter().copied()).collect()
}

/// Composite rule on `[a, b]` with extra panel breaks at `cuts`. The last
/// segment is mapped by `v = b − (b − c)τ²` so integrands behaving like
/// `√(b − v)` become smooth.
fn broken_rule(a: f64, b: f64, cuts: &[f64], max_panel: f64) -> Vec<(f64, f64)> {
    let mut pts = vec![a];
    pts.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let last = pts.len() - 2;
    let mut out = Vec::new();
    for (k, w) in pts.windows(2).enumerate() {
        if k < last {
            out.extend(nodes_of(&CompositeGauss::with_max_panel(w[0], w[1], max_panel, PANEL_ORDER)));
            continue;
        }
        let len = w[1] - w[0];
        // dv/dτ peaks at 2·len, so halve the τ panels accordingly.
        let rule = CompositeGauss::with_max_panel(0.0, 1.0, max_panel / (2.0 * len), PANEL_ORDER);
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            out.push((w[1] - len * t * t, 2.0 * len * t * wt));
        }
    }
    out
}

struct Frame {
    e1: Vec3,
    e2: Vec3,
    center: Vec3,
}

impl Frame {
    fn new(plan: &SurgeryPlan, azimuth: f64) -> Self {
        let (s, c) = azimuth.sin_cos();
        Self {
            e1: Vec3::new(s, -c, 0.0),
            e2: Vec3::new(c, s, 0.0),
            center: Vec3::from(plan.center),
        }
    }

    /// `y` in slice coordinates to a direction in ℝ³.
    fn dir(&self, y1: f64, y2: f64, y3: f64) -> Vec3 {
        self.e1 * y1 + self.e2 * y2 + Vec3::z() * y3
    }
}

fn strip_lines(sampler: &dyn FieldSampler, plan: &SurgeryPlan, frame: &Frame) -> Result<Vec<Line>> {
    let r = plan.radius;
    let rho = plan.resolution;
    let half = r * plan.psi1.sin();
    let y1_rule = nodes_of(&CompositeGauss::new(
        -half,
        half,
        ((2.0 * half * rho / PANEL_ORDER as f64).ceil() as usize).max(2),
        PANEL_ORDER,
    ));
    let cos2 = plan.psi2.cos();
    run(&y1_rule, |&(y1, w1)| {
        let beta = (1.0 - (y1 / r).powi(2)).sqrt();
        let alpha_s = (cos2 / beta).min(1.0).asin();
        // Panel breaks equispaced in geodesic length along the strip line.
        let panels = ((2.0 * alpha_s * r * beta * rho / PANEL_ORDER as f64).ceil() as usize).max(2);
        let breaks: Vec<f64> = (0..=panels)
            .map(|k| beta * (-alpha_s + 2.0 * alpha_s * k as f64 / panels as f64).sin())
            .collect();
        let mut acc = LineSum::new(sampler);
        let mut i = [0.0; 3];
        for w in breaks.windows(2) {
            let rule = CompositeGauss::new(w[0], w[1], 1, PANEL_ORDER);
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let y3 = r * t;
                let y2sq = r * r - y1 * y1 - y3 * y3;
                if y2sq <= 0.0 {
                    return Err(Error::Geometry(format!("strip graph left the sphere at y1 = {y1}, y3 = {y3}")));
                }
                let y2 = y2sq.sqrt();
                let d = frame.dir(y1, y2, y3);
                acc.add(&(frame.center + d), &(d * (w1 * wt / y2)), r / y2 * w1 * wt)?;
                i[0] += y1.abs() / y2 * wt;
                i[1] += wt;
                i[2] += y3.abs() / y2 * wt;
            }
        }
        Ok(acc.finish(i))
    })
}

fn offstrip_lines(sampler: &dyn FieldSampler, plan: &SurgeryPlan, frame: &Frame, sign: f64, delta: f64) -> Result<Vec<Line>> {
    let r = plan.radius;
    let rho = plan.resolution;
    let (s1, s2, sd) = (plan.psi1.sin(), plan.psi2.sin(), delta.sin());
    let cot = delta.cos() / sd;
    let cos2 = plan.psi2.cos();
    let rule = broken_rule(r * s1, r * sd, &[r * s2 * sd, r * s2], PANEL_ORDER as f64 / rho);
    run(&rule, |&(v, w1)| {
        let y1 = sign * v;
        let beta = (1.0 - (v / r).powi(2)).max(0.0).sqrt();
        let mut acc = LineSum::new(sampler);
        if beta > 0.0 {
            let a_cap = if cos2 >= beta { FRAC_PI_2 } else { (cos2 / beta).asin() };
            let a_slice = (v * cot / (r * beta)).min(1.0).acos();
            let a = a_cap.min(a_slice);
            if a > 0.0 {
                let ar = CompositeGauss::with_max_panel(-a, a, PANEL_ORDER as f64 / (rho * r * beta), PANEL_ORDER);
                for (&al, &wa) in ar.nodes.iter().zip(&ar.weights) {
                    let (sa, ca) = al.sin_cos();
                    let d = frame.dir(y1, r * beta * ca, r * beta * sa);
                    acc.add(&(frame.center + d), &(d * (w1 * wa / r)), w1 * wa)?;
                }
            }
        }
        Ok(acc.finish([0.0; 3]))
    })
}

/// Lines of constant polar angle `t` (measured from +e₃) over the azimuths
/// `[lo, hi]`; `trapezoid` switches to an equispaced periodic rule.
fn polar_lines(
    sampler: &dyn FieldSampler,
    plan: &SurgeryPlan,
    t_rule: &[(f64, f64)],
    (lo, hi): (f64, f64),
    trapezoid: Option<usize>,
) -> Result<Vec<Line>> {
    let r = plan.radius;
    let rho = plan.resolution;
    let center = Vec3::from(plan.center);
    run(t_rule, |&(t, wt)| {
        let (st, ct) = t.sin_cos();
        let phi: Vec<(f64, f64)> = match trapezoid {
            Some(m) => (0..m).map(|k| (lo + (hi - lo) * k as f64 / m as f64, (hi - lo) / m as f64)).collect(),
            None => nodes_of(&CompositeGauss::with_max_panel(lo, hi, PANEL_ORDER as f64 / (rho * r * st.max(1e-300)), PANEL_ORDER)),
        };
        let mut acc = LineSum::new(sampler);
        for (p, wp) in phi {
            let (sp, cp) = p.sin_cos();
            let nu = Vec3::new(st * cp, st * sp, ct);
            let w = r * st * wt * wp;
            acc.add(&(center + nu * r), &(nu * w), w)?;
        }
        Ok(acc.finish([0.0; 3]))
    })
}

/// Full surgery decomposition of `(1/R)∮ Tν dS` for a plan.
pub fn flux_sphere_3d(sampler: &dyn FieldSampler, plan: &SurgeryPlan) -> Result<FluxDecomposition> {
    let r = plan.radius;
    let rho = plan.resolution;
    let panel = PANEL_ORDER as f64 / (rho * r);

    // Caps about the north (t ∈ [0, ψ₂]) and south (t ∈ [π − ψ₂, π]) poles.
    let m = ((TAU * r * plan.psi2.sin() * rho).ceil() as usize).max(16);
    let north = nodes_of(&CompositeGauss::with_max_panel(0.0, plan.psi2, panel, PANEL_ORDER));
    let south = nodes_of(&CompositeGauss::with_max_panel(PI - plan.psi2, PI, panel, PANEL_ORDER));
    let mut all = polar_lines(sampler, plan, &north, (0.0, TAU), Some(m))?;
    all.extend(polar_lines(sampler, plan, &south, (0.0, TAU), Some(m))?);
    let cap_lines = all.len();
    let cap_sup_tensor = all.iter().map(|l| l.sup_tensor).fold(0.0, f64::max);

    struct SliceRanges {
        strip: std::ops::Range<usize>,
        off: std::ops::Range<usize>,
        i: [f64; 3],
    }
    let mut ranges = Vec::with_capacity(plan.slices.len());
    for s in &plan.slices {
        let frame = Frame::new(plan, s.azimuth);
        let a = all.len();
        let strip = strip_lines(sampler, plan, &frame)?;
        let mut i = [0.0f64; 3];
        for l in &strip {
            for j in 0..3 {
                i[j] = i[j].max(l.i[j]);
            }
        }
        all.extend(strip);
        let b = all.len();
        all.extend(offstrip_lines(sampler, plan, &frame, 1.0, s.half_width_cw)?);
        all.extend(offstrip_lines(sampler, plan, &frame, -1.0, s.half_width_ccw)?);
        ranges.push(SliceRanges {
            strip: a..b,
            off: b..all.len(),
            i,
        });
    }
    let theta = nodes_of(&CompositeGauss::with_max_panel(plan.psi2, PI - plan.psi2, panel, PANEL_ORDER));
    let mut gap_ranges = Vec::new();
    for &(lo, hi) in &plan.gaps {
        let a = all.len();
        all.extend(polar_lines(sampler, plan, &theta, (lo, hi), None)?);
        gap_ranges.push(a..all.len());
    }

    let whole = merge(&all);
    let caps = merge(&all[..cap_lines]);
    let slices: Vec<SliceFlux> = plan
        .slices
        .iter()
        .zip(&ranges)
        .map(|(g, rg)| {
            let strip = merge(&all[rg.strip.clone()]);
            let offstrip = merge(&all[rg.off.clone()]);
            let (s, c) = g.azimuth.sin_cos();
            SliceFlux {
                geometry: *g,
                conormal: [c, s, 0.0],
                strip,
                offstrip,
                total: std::array::from_fn(|k| strip.flux[k] + offstrip.flux[k]),
                i_max: rg.i,
            }
        })
        .collect();
    let gaps: Vec<RegionFlux> = gap_ranges.into_iter().map(|g| merge(&all[g])).collect();

    let mut parts = caps.flux;
    let mut area = caps.area;
    for s in &slices {
        for k in 0..3 {
            parts[k] += s.total[k];
        }
        area += s.strip.area + s.offstrip.area;
    }
    for g in &gaps {
        for k in 0..3 {
            parts[k] += g.flux[k];
        }
        area += g.area;
    }
    let partition_error = (0..3).map(|k| (whole.flux[k] - parts[k]).abs()).fold(0.0, f64::max);
    let sphere = 4.0 * PI * r;
    let cap_area = plan.cap_area();
    Ok(FluxDecomposition {
        plan: plan.clone(),
        caps,
        cap_sup_tensor,
        cap_area,
        cap_bound: cap_sup_tensor * cap_area,
        slices,
        gaps,
        total: whole.flux,
        partition_error,
        coverage_error: (area - sphere).abs() / sphere,
        offstrip_shape: plan.offstrip_shape(),
        nodes: whole.nodes,
    })
}
