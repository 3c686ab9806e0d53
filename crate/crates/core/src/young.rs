//! Contact angles and Young's law.
//!
//! Interfaces are indexed `Γ₁₂, Γ₂₃, Γ₃₁` (well pairs `(0, 1)`, `(1, 2)`,
//! `(2, 0)`), each with conormal azimuth `θ_ij`. Counterclockwise the rays
//! run `Γ₁₂, Γ₂₃, Γ₃₁`, so the region angles are
//! `φ₁ = θ₁₂ − θ₃₁`, `φ₂ = θ₂₃ − θ₁₂`, `φ₃ = θ₃₁ − θ₂₃` (mod 2π), and `φ_i`
//! pairs with the action of the opposite interface:
//! `sin φ₁/σ₂₃ = sin φ₂/σ₃₁ = sin φ₃/σ₁₂`.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{GridField, PhaseMap};

/// Well pairs of `Γ₁₂, Γ₂₃, Γ₃₁`.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Fewest interface points accepted for a fit.
pub const MIN_POINTS: usize = 10;

/// A straight interface fitted by total least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedRay {
    pub pair: (usize, usize),
    /// Unit direction pointing away from the junction.
    pub conormal: [f64; 2],
    pub azimuth: f64,
    pub points: usize,
    /// RMS perpendicular distance of the points to the fitted line.
    pub rms: f64,
    /// Distance of the fitted line from the origin.
    pub offset: f64,
}

/// Fits each interface from the phase-map points with
/// `r_min ≤ |x| ≤ r_max`. The line passes through the centroid of the
/// points; its distance from the origin is reported as `offset`.
pub fn extract_interfaces(field: &GridField, phase: &PhaseMap, annulus: (f64, f64)) -> Result<[FittedRay; 3]> {
    let (r_min, r_max) = annulus;
    if !(r_min >= 0.0 && r_max > r_min) {
        return Err(invalid("annulus needs 0 ≤ r_min < r_max"));
    }
    if field.spec.well_count() != 3 {
        return Err(invalid("contact angles need a three-well potential"));
    }
    let fit = |(i, j): (usize, usize)| -> Result<FittedRay> {
        let pts: Vec<(f64, f64)> = phase
            .interface(i, j)
            .into_iter()
            .map(|p| (p.x, p.y))
            .filter(|&(x, y)| {
                let r = x.hypot(y);
                r >= r_min && r <= r_max
            })
            .collect();
        if pts.len() < MIN_POINTS {
            return Err(Error::Extraction {
                i,
                j,
                reason: format!("{} interface points in the annulus, need {MIN_POINTS}", pts.len()),
            });
        }
        let n = pts.len() as f64;
        let (cx, cy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for &(x, y) in &pts {
            let (dx, dy) = (x - cx, y - cy);
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        // Principal axis of the 2×2 scatter matrix.
        let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let (mut dy, mut dx) = angle.sin_cos();
        if dx * cx + dy * cy < 0.0 {
            dx = -dx;
            dy = -dy;
        }
        let perp = |x: f64, y: f64| (x - cx) * -dy + (y - cy) * dx;
        let rms = (pts.iter().map(|&(x, y)| perp(x, y).powi(2)).sum::<f64>() / n).sqrt();
        Ok(FittedRay {
            pair: (i, j),
            conormal: [dx, dy],
            azimuth: dy.atan2(dx).rem_euclid(TAU),
            points: pts.len(),
            rms,
            offset: perp(0.0, 0.0).abs(),
        })
    };
    Ok([fit(PAIRS[0])?, fit(PAIRS[1])?, fit(PAIRS[2])?])
}

fn check_actions(s: [f64; 3]) -> Result<()> {
    let [a, b, c] = s;
    let ok = s.iter().all(|v| v.is_finite() && *v > 0.0) && a < b + c && b < c + a && c < a + b;
    if ok {
        Ok(())
    } else {
        Err(Error::NoBalance(a, b, c))
    }
}

/// Region angles `(φ₁, φ₂, φ₃)` balancing the actions `(σ₁₂, σ₂₃, σ₃₁)`.
pub fn predict_angles(sigma: [f64; 3]) -> Result<[f64; 3]> {
    check_actions(sigma)?;
    let [s12, s23, s31] = sigma;
    // Four times the area of the force triangle, Kahan's ordering x ≥ y ≥ z.
    let mut t = sigma;
    t.sort_by(|a, b| b.total_cmp(a));
    let [x, y, z] = t;
    let area4 = ((x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z))).sqrt();
    // φ_i = π − α_i with α_i the triangle angle opposite σ_i's action; atan2
    // keeps sin φ accurate near degenerate triangles.
    let angle = |opp: f64, a: f64, b: f64| PI - area4.atan2((a * a + b * b) - opp * opp);
    Ok([angle(s23, s12, s31), angle(s31, s23, s12), angle(s12, s31, s23)])
}

/// Region angles from the conormal azimuths `(θ₁₂, θ₂₃, θ₃₁)`.
pub fn region_angles(azimuths: [f64; 3]) -> [f64; 3] {
    let [t12, t23, t31] = azimuths;
    [(t12 - t31).rem_euclid(TAU), (t23 - t12).rem_euclid(TAU), (t31 - t23).rem_euclid(TAU)]
}

/// `(sin φ₁/σ₂₃, sin φ₂/σ₃₁, sin φ₃/σ₁₂)`.
pub fn sine_ratios(angles: [f64; 3], sigma: [f64; 3]) -> [f64; 3] {
    [angles[0].sin() / sigma[1], angles[1].sin() / sigma[2], angles[2].sin() / sigma[0]]
}

/// `(max − min) / mean` of the sine ratios.
pub fn sine_spread(ratios: [f64; 3]) -> f64 {
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = ratios.iter().sum::<f64>() / 3.0;
    (max - min) / mean.abs()
}

/// `|σ₁₂ν₁₂ + σ₂₃ν₂₃ + σ₃₁ν₃₁| / Σσ`.
pub fn balance_residual(sigma: [f64; 3], conormals: [[f64; 2]; 3]) -> Result<f64> {
    for nu in &conormals {
        if (1.0 - nu[0].hypot(nu[1])).abs() > 1e-6 {
            return Err(invalid(format!("conormal {nu:?} is not a unit vector")));
        }
    }
    let (mut x, mut y) = (0.0, 0.0);
    for (s, nu) in sigma.iter().zip(&conormals) {
        x += s * nu[0];
        y += s * nu[1];
    }
    Ok(x.hypot(y) / sigma.iter().sum::<f64>())
}

/// Conormals placing the region angles `φ` with `Γ₁₂` at azimuth `theta12`.
pub fn conormals_from_angles(theta12: f64, angles: [f64; 3]) -> [[f64; 2]; 3] {
    let t = [theta12, theta12 + angles[1], theta12 + angles[1] + angles[2]];
    t.map(|a| {
        let (s, c) = a.sin_cos();
        [c, s]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineLawCheck {
    pub ratios: [f64; 3],
    pub spread: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    /// `ν₁₂, ν₂₃, ν₃₁`.
    pub conormals: [[f64; 2]; 3],
    pub azimuths: [f64; 3],
    /// `φ₁, φ₂, φ₃` in radians.
    pub angles: [f64; 3],
    pub angles_deg: [f64; 3],
    /// `σ₁₂, σ₂₃, σ₃₁`.
    pub sigma: [f64; 3],
    pub sine_ratios: [f64; 3],
    pub sine_spread: f64,
    pub balance_residual: f64,
    /// `|φ₁ + φ₂ + φ₃ − 2π|`.
    pub angle_sum_error: f64,
    /// Angles balancing `sigma`, when the actions admit a junction.
    pub predicted_deg: Option<[f64; 3]>,
    /// Largest `|measured − predicted|` in degrees.
    pub max_prediction_error_deg: Option<f64>,
    pub fits: Vec<FittedRay>,
}

impl AngleReport {
    pub fn from_conormals(conormals: [[f64; 2]; 3], sigma: [f64; 3]) -> Result<Self> {
        let azimuths = conormals.map(|n| n[1].atan2(n[0]).rem_euclid(TAU));
        let angles = region_angles(azimuths);
        let ratios = sine_ratios(angles, sigma);
        let predicted = predict_angles(sigma).ok();
        let angles_deg = angles.map(f64::to_degrees);
        Ok(Self {
            conormals,
            azimuths,
            angles,
            angles_deg,
            sigma,
            sine_ratios: ratios,
            sine_spread: sine_spread(ratios),
            balance_residual: balance_residual(sigma, conormals)?,
            angle_sum_error: (angles.iter().sum::<f64>() - TAU).abs(),
            predicted_deg: predicted.map(|p| p.map(f64::to_degrees)),
            max_prediction_error_deg: predicted.map(|p| {
                (0..3)
                    .map(|k| (angles_deg[k] - p[k].to_degrees()).abs())
                    .fold(0.0, f64::max)
            }),
            fits: Vec::new(),
        })
    }

    pub fn from_fits(fits: [FittedRay; 3], sigma: [f64; 3]) -> Result<Self> {
        let mut r = Self::from_conormals(fits.clone().map(|f| f.conormal), sigma)?;
        r.fits = fits.to_vec();
        Ok(r)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Measured and predicted values side by side.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["quantity", "measured", "predicted"])?;
        for k in 0..3 {
            let pred = self.predicted_deg.map(|p| p[k].to_string()).unwrap_or_default();
            w.write_record([format!("phi{}_deg", k + 1), self.angles_deg[k].to_string(), pred])?;
        }
        for (k, name) in ["sigma12", "sigma23", "sigma31"].iter().enumerate() {
            w.write_record([name.to_string(), self.sigma[k].to_string(), String::new()])?;
        }
        w.write_record(["sine_spread".to_string(), self.sine_spread.to_string(), "0".into()])?;
        w.write_record(["balance_residual".to_string(), self.balance_residual.to_string(), "0".into()])?;
        w.flush()?;
        Ok(())
    }
}

pub fn verify_sine_law(report: &AngleReport, tolerance: f64) -> SineLawCheck {
    let ratios = report.sine_ratios;
    let spread = sine_spread(ratios);
    SineLawCheck {
        ratios,
        spread,
        tolerance,
        pass: spread <= tolerance,
    }
}

/// Appends one summary row per report to a CSV file, writing the header
/// when the file is new.
pub fn append_summary(path: &Path, label: &str, report: &AngleReport) -> Result<()> {
    let fresh = !path.exists();
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "label,phi1_deg,phi2_deg,phi3_deg,sine_spread,balance_residual,max_prediction_error_deg")?;
    }
    writeln!(
        f,
        "{label},{},{},{},{},{},{}",
        report.angles_deg[0],
        report.angles_deg[1],
        report.angles_deg[2],
        report.sine_spread,
        report.balance_residual,
        report.max_prediction_error_deg.map(|e| e.to_string()).unwrap_or_default()
    )?;
    Ok(())
}
