//! Sharp-triod initial data built from the three connection profiles.
//!
//! Ray `r ∈ {0, 1, 2}` carries the interface `Γ_12`, `Γ_23`, `Γ_31` and
//! separates well `r` (clockwise side) from well `r + 1` (counterclockwise
//! side). Its unit normal `n_r = (−sin θ_r, cos θ_r)` points into the
//! counterclockwise region, so the profile `U_r(s)` with `s = x · n_r` runs
//! from `a_r` to `a_{r+1}`. The three tapered profiles are blended with
//! Gaussian weights in the distance to each ray:
//!
//! ```text
//! u(x) = Σ_r ω_r V_r(x · n_r) / Σ_r ω_r,   ω_r = exp(−(d_r² − d_min²)/ε²)
//! ```

use serde::{Deserialize, Serialize};

use crate::connect::{ConnectionPath, ProfileInterpolator};
use crate::error::{invalid, Result};
use crate::numeric::wrap_angle;
use crate::potential::TripleWellSpec;
use crate::{Mat3, Vec3};

use super::sampler::FieldSampler;
use super::GridField;

/// Rays closer than this (degrees) are rejected.
pub const MIN_RAY_GAP_DEG: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeParams {
    /// Half-width `w` of the tube around each ray; the profile is tapered to
    /// the wells over `w − taper ≤ |s| ≤ w`.
    pub half_width: f64,
    pub taper: f64,
    /// Length scale `ε` of the blending weights.
    pub blend: f64,
}

impl Default for TubeParams {
    fn default() -> Self {
        Self {
            half_width: 10.0,
            taper: 1.0,
            blend: 1.0,
        }
    }
}

/// Checks that three ray angles are ordered counterclockwise and separated
/// by at least [`MIN_RAY_GAP_DEG`]; returns the region angles
/// `(φ₁, φ₂, φ₃)` with `φ_{r+1} = θ_{r+1} − θ_r`.
pub fn ray_order_check(angles: [f64; 3]) -> Result<[f64; 3]> {
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(invalid("ray angles must be finite"));
    }
    let gap = |a: f64, b: f64| wrap_angle(b - a);
    let phi = [gap(angles[2], angles[0]), gap(angles[0], angles[1]), gap(angles[1], angles[2])];
    let total: f64 = phi.iter().sum();
    if (total - 2.0 * std::f64::consts::PI).abs() > 1e-9 {
        return Err(invalid("rays must be ordered counterclockwise as Γ12, Γ23, Γ31"));
    }
    let min_gap = MIN_RAY_GAP_DEG.to_radians();
    if phi.iter().any(|&p| p < min_gap) {
        return Err(invalid(format!("rays closer than {MIN_RAY_GAP_DEG}° apart")));
    }
    Ok(phi)
}

/// The blended triod ansatz, defined on all of ℝ².
#[derive(Debug, Clone)]
pub struct TriodAnsatz {
    pub spec: TripleWellSpec,
    pub angles: [f64; 3],
    pub tube: TubeParams,
    profiles: [ProfileInterpolator; 3],
    minima: [Vec3; 3],
}

impl TriodAnsatz {
    /// `connections[r]` must join wells `r` and `r + 1 (mod 3)`, in either
    /// direction.
    pub fn new(spec: &TripleWellSpec, connections: &[ConnectionPath; 3], angles: [f64; 3], tube: TubeParams) -> Result<Self> {
        if spec.well_count() != 3 {
            return Err(invalid("a triod needs a three-well potential"));
        }
        ray_order_check(angles)?;
        if !(tube.half_width > tube.taper && tube.taper > 0.0 && tube.blend > 0.0) {
            return Err(invalid("tube parameters must satisfy half_width > taper > 0 and blend > 0"));
        }
        let mut profiles = Vec::with_capacity(3);
        for (r, c) in connections.iter().enumerate() {
            let want = (r, (r + 1) % 3);
            let path = if c.endpoints == want {
                c.clone()
            } else if c.endpoints == (want.1, want.0) {
                c.reversed()
            } else {
                return Err(invalid(format!(
                    "connection {r} joins wells {:?}, expected {:?}",
                    c.endpoints, want
                )));
            };
            profiles.push(path.interpolator());
        }
        Ok(Self {
            spec: spec.clone(),
            angles: angles.map(wrap_angle),
            tube,
            profiles: profiles.try_into().expect("three profiles"),
            minima: [spec.minima[0], spec.minima[1], spec.minima[2]],
        })
    }

    /// Tapered profile of ray `r` at signed distance `s`.
    fn tapered(&self, r: usize, s: f64) -> Vec3 {
        let w = self.tube.half_width;
        let end = if s < 0.0 { self.minima[r] } else { self.minima[(r + 1) % 3] };
        let a = s.abs();
        if a >= w {
            return end;
        }
        let (v, _) = self.profiles[r].eval(s);
        let start = w - self.tube.taper;
        if a <= start {
            return v;
        }
        let t = (a - start) / self.tube.taper;
        let chi = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        v * (1.0 - chi) + end * chi
    }

    /// Signed distance to the line of ray `r` and distance to the ray itself.
    #[inline]
    fn ray_coordinates(&self, r: usize, x: f64, y: f64) -> (f64, f64) {
        let (sin, cos) = self.angles[r].sin_cos();
        let along = x * cos + y * sin;
        let s = -x * sin + y * cos;
        let d = if along >= 0.0 { s.abs() } else { x.hypot(y) };
        (s, d)
    }

    pub fn eval(&self, x: f64, y: f64) -> Vec3 {
        let coords = [0, 1, 2].map(|r| self.ray_coordinates(r, x, y));
        let dmin = coords.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let eps2 = self.tube.blend * self.tube.blend;
        let mut num = Vec3::zeros();
        let mut den = 0.0;
        for (r, &(s, d)) in coords.iter().enumerate() {
            let w = (-(d * d - dmin * dmin) / eps2).exp();
            if w < 1e-300 {
                continue;
            }
            num += self.tapered(r, s) * w;
            den += w;
        }
        num / den
    }

    /// Index of the ray nearest to `(x, y)` and the signed distance to it.
    pub fn nearest_ray(&self, x: f64, y: f64) -> (usize, f64) {
        let mut best = (0, 0.0, f64::INFINITY);
        for r in 0..3 {
            let (s, d) = self.ray_coordinates(r, x, y);
            if d < best.2 {
                best = (r, s, d);
            }
        }
        (best.0, best.1)
    }

    /// Profile `U_r` of ray `r` (untapered).
    pub fn profile(&self, r: usize) -> &ProfileInterpolator {
        &self.profiles[r]
    }
}

impl FieldSampler for TriodAnsatz {
    fn potential(&self) -> &TripleWellSpec {
        &self.spec
    }

    fn value(&self, x: &Vec3) -> Result<Vec3> {
        Ok(self.eval(x[0], x[1]))
    }

    fn gradient(&self, x: &Vec3) -> Result<Mat3> {
        const STEP: f64 = 1e-5;
        let gx = (self.eval(x[0] + STEP, x[1]) - self.eval(x[0] - STEP, x[1])) / (2.0 * STEP);
        let gy = (self.eval(x[0], x[1] + STEP) - self.eval(x[0], x[1] - STEP)) / (2.0 * STEP);
        Ok(Mat3::from_columns(&[gx, gy, Vec3::zeros()]))
    }
}

/// Samples the triod ansatz on an `n × n` grid of spacing `h`.
pub fn init_triod(
    spec: &TripleWellSpec,
    connections: &[ConnectionPath; 3],
    angles: [f64; 3],
    n: usize,
    spacing: f64,
    tube: TubeParams,
) -> Result<(GridField, TriodAnsatz)> {
    let ansatz = TriodAnsatz::new(spec, connections, angles, tube)?;
    let field = GridField::from_fn(spec, n, spacing, |x, y| ansatz.eval(x, y))?;
    Ok((field, ansatz))
}
