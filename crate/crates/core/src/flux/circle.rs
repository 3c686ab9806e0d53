//! Flux of `T` through a circle `|x| = R` in the plane.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::FieldSampler;
use crate::numeric::{angle_diff, pairwise_sum3, wrap_angle};
use crate::stress::stress_tensor;
use crate::Vec3;

/// Contribution of the arc around one interface crossing, bounded by the
/// bisectors to the neighbouring crossings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcWindow {
    pub azimuth: f64,
    pub from: f64,
    pub to: f64,
    pub flux: [f64; 2],
    pub nodes: usize,
}

impl ArcWindow {
    /// `|flux + σν| / σ` with `ν` the outward conormal at the crossing.
    pub fn limit_error(&self, sigma: f64) -> f64 {
        let (s, c) = self.azimuth.sin_cos();
        (self.flux[0] + sigma * c).hypot(self.flux[1] + sigma * s) / sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleFlux {
    pub radius: f64,
    pub nodes: usize,
    pub total: [f64; 2],
    pub windows: Vec<ArcWindow>,
}

impl CircleFlux {
    pub fn total_norm(&self) -> f64 {
        self.total[0].hypot(self.total[1])
    }
}

/// Trapezoidal `∮_{|x|=R} Tν ds` on `nodes` equispaced points starting at
/// azimuth 0, split into windows around the given crossing azimuths.
pub fn flux_circle_2d(sampler: &dyn FieldSampler, radius: f64, nodes: usize, crossings: &[f64]) -> Result<CircleFlux> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("circle radius must be positive"));
    }
    if nodes < 8 {
        return Err(invalid("circle quadrature needs at least 8 nodes"));
    }
    let mut az: Vec<f64> = crossings.iter().map(|&a| wrap_angle(a)).collect();
    az.sort_by(f64::total_cmp);
    let ds = TAU * radius / nodes as f64;
    let mut contrib = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let t = TAU * k as f64 / nodes as f64;
        let (s, c) = t.sin_cos();
        let nu = Vec3::new(c, s, 0.0);
        let f = stress_tensor(sampler, &(nu * radius))? * nu * ds;
        contrib.push((t, [f[0], f[1], 0.0]));
    }
    let all: Vec<[f64; 3]> = contrib.iter().map(|c| c.1).collect();
    let total = pairwise_sum3(&all);
    let m = az.len();
    let mut windows = Vec::with_capacity(m);
    for (k, &a) in az.iter().enumerate() {
        let (from, to) = if m == 1 {
            (a - 0.5 * TAU, a + 0.5 * TAU)
        } else {
            let prev = az[(k + m - 1) % m];
            let next = az[(k + 1) % m];
            let lo = -0.5 * (a - prev).rem_euclid(TAU);
            let hi = 0.5 * (next - a).rem_euclid(TAU);
            (a + lo, a + hi)
        };
        let (lo, hi) = (from - a, to - a);
        let mine: Vec<[f64; 3]> = contrib
            .iter()
            .filter(|(t, _)| {
                let d = angle_diff(a, *t);
                // Half-open windows so every node lands in exactly one.
                (d >= lo && d < hi) || (m == 1 && d == -lo)
            })
            .map(|c| c.1)
            .collect();
        let f = pairwise_sum3(&mine);
        windows.push(ArcWindow {
            azimuth: a,
            from,
            to,
            flux: [f[0], f[1]],
            nodes: mine.len(),
        });
    }
    Ok(CircleFlux {
        radius,
        nodes,
        total: [total[0], total[1]],
        windows,
    })
}
