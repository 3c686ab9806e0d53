//! Surgery plans: cap and strip angles for a sphere radius, and the slice
//! layout around the interface meridians.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::wrap_angle;

/// Gauss–Legendre order of every panel.
pub const PANEL_ORDER: usize = 4;

/// `ψ₁(R)` (strip half-angle) and `ψ₂(R)` (cap polar angle).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `ψ₁ = R^{-4/5}`, `ψ₂ = R^{-3/4}`.
    Canonical,
    /// `ψ₁ = c1·R^{-e1}`, `ψ₂ = c2·R^{-e2}`.
    Custom { c1: f64, e1: f64, c2: f64, e2: f64 },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Custom {
            c1: 0.3,
            e1: 0.8,
            c2: 1.0,
            e2: 0.75,
        }
    }
}

impl Schedule {
    pub fn angles(&self, radius: f64) -> (f64, f64) {
        match *self {
            Schedule::Canonical => (radius.powf(-0.8), radius.powf(-0.75)),
            Schedule::Custom { c1, e1, c2, e2 } => (c1 * radius.powf(-e1), c2 * radius.powf(-e2)),
        }
    }
}

/// One slice: the azimuths within `half_width_cw` clockwise and
/// `half_width_ccw` counterclockwise of an interface meridian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceGeometry {
    pub azimuth: f64,
    pub half_width_cw: f64,
    pub half_width_ccw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryPlan {
    pub radius: f64,
    pub center: [f64; 3],
    pub schedule: Schedule,
    pub psi1: f64,
    pub psi2: f64,
    /// `√2 sin ψ₁` and `sin ψ₂`.
    pub condition: (f64, f64),
    /// Slices in counterclockwise order of their meridians.
    pub slices: Vec<SliceGeometry>,
    /// Azimuth ranges `[lo, hi]` covered by no slice (empty when the slices
    /// meet at the bisectors).
    pub gaps: Vec<(f64, f64)>,
    /// Quadrature nodes per unit of geodesic length.
    pub resolution: f64,
}

impl SurgeryPlan {
    /// Largest azimuth a strip point reaches from its meridian.
    pub fn strip_azimuth(&self) -> f64 {
        (self.psi1.sin() / self.psi2.sin()).asin()
    }

    /// Renormalized cap area `4πR(1 − cos ψ₂)`.
    pub fn cap_area(&self) -> f64 {
        4.0 * PI * self.radius * (1.0 - self.psi2.cos())
    }

    /// Functional form `R e^{−R sin ψ₁}` of the off-strip estimate.
    pub fn offstrip_shape(&self) -> f64 {
        self.radius * (-self.radius * self.psi1.sin()).exp()
    }
}

/// Builds and validates a plan. With `delta = None` neighbouring slices meet
/// at the bisectors between meridians; otherwise every slice has half-width
/// `delta` and the uncovered azimuths become gaps.
pub fn make_surgery_plan(radius: f64, schedule: Schedule, azimuths: &[f64], delta: Option<f64>, resolution: f64) -> Result<SurgeryPlan> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("sphere radius must be positive and finite"));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(invalid("quadrature resolution must be positive"));
    }
    if azimuths.is_empty() || azimuths.iter().any(|a| !a.is_finite()) {
        return Err(invalid("need at least one finite interface azimuth"));
    }
    let (psi1, psi2) = schedule.angles(radius);
    if !(psi1 > 0.0 && psi2 > 0.0 && psi2 < FRAC_PI_2) {
        return Err(invalid(format!("schedule gives psi1 = {psi1}, psi2 = {psi2} at R = {radius}")));
    }
    let lhs = SQRT_2 * psi1.sin();
    let rhs = psi2.sin();
    if !(lhs < rhs && psi1 < psi2) {
        return Err(Error::ScheduleViolation { radius, lhs, rhs });
    }

    let mut sorted: Vec<f64> = azimuths.iter().map(|&a| wrap_angle(a)).collect();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let gap_after = |k: usize| {
        if m == 1 {
            TAU
        } else {
            (sorted[(k + 1) % m] - sorted[k]).rem_euclid(TAU)
        }
    };
    if (0..m).any(|k| gap_after(k) < 1e-9) {
        return Err(invalid("interface azimuths must be distinct"));
    }
    let mut slices = Vec::with_capacity(m);
    let mut gaps = Vec::new();
    for k in 0..m {
        let (cw, ccw) = match delta {
            None => (0.5 * gap_after((k + m - 1) % m), 0.5 * gap_after(k)),
            Some(d) => {
                if !(d > 0.0) {
                    return Err(invalid("slice half-width must be positive"));
                }
                if 2.0 * d > gap_after(k) + 1e-12 {
                    return Err(invalid(format!("slices of half-width {d} overlap: meridian gap {}", gap_after(k))));
                }
                if 2.0 * d < gap_after(k) - 1e-12 {
                    gaps.push((sorted[k] + d, sorted[k] + gap_after(k) - d));
                }
                (d, d)
            }
        };
        if cw > FRAC_PI_2 + 1e-12 || ccw > FRAC_PI_2 + 1e-12 {
            return Err(Error::Geometry(format!(
                "slice around azimuth {} is wider than a half-space; add meridians or pass a smaller half-width",
                sorted[k]
            )));
        }
        slices.push(SliceGeometry {
            azimuth: sorted[k],
            half_width_cw: cw.min(FRAC_PI_2),
            half_width_ccw: ccw.min(FRAC_PI_2),
        });
    }
    let plan = SurgeryPlan {
        radius,
        center: [0.0, 0.0, 2.0 * radius],
        schedule,
        psi1,
        psi2,
        condition: (lhs, rhs),
        slices,
        gaps,
        resolution,
    };
    let reach = plan.strip_azimuth();
    if plan.slices.iter().any(|s| s.half_width_cw <= reach || s.half_width_ccw <= reach) {
        return Err(Error::Geometry(format!("strip reaches azimuth {reach} beyond its slice")));
    }
    Ok(plan)
}
