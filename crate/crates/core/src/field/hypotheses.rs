//! Numerical checks of the far-field hypotheses: exponential approach to the
//! wells away from the interfaces, and convergence to the one-dimensional
//! connection profile along each interface.

use serde::{Deserialize, Serialize};

use crate::connect::ProfileInterpolator;
use crate::error::{invalid, Result};
use crate::numeric::{fit_line, LineFit};

use super::{GridField, PhaseMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayBin {
    pub centre: f64,
    pub samples: usize,
    /// Largest deviation in the bin.
    pub max: f64,
}

/// Fit of `log(max deviation)` against the distance to `∂C_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub bins: Vec<DecayBin>,
    /// Bin centres skipped for too few samples or a zero deviation.
    pub skipped: Vec<f64>,
    pub slope: Option<f64>,
    pub prefactor: Option<f64>,
    /// All deviations vanish (to machine precision): nothing to fit.
    pub degenerate: bool,
}

impl DecayFit {
    /// Passes when the fitted slope is at most `max_slope`, or the data is
    /// degenerate.
    pub fn passes(&self, max_slope: f64) -> bool {
        self.degenerate || self.slope.is_some_and(|s| s <= max_slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis1Report {
    pub distance_range: (f64, f64),
    pub bin_width: f64,
    /// One fit per well for `|u − a_i|`.
    pub value_decay: Vec<DecayFit>,
    /// One fit per well for `|∇u|`.
    pub gradient_decay: Vec<DecayFit>,
}

impl Hypothesis1Report {
    pub fn passes(&self, max_slope: f64) -> bool {
        self.value_decay.iter().chain(&self.gradient_decay).all(|f| f.passes(max_slope))
    }

    /// Largest (least negative) fitted slope over all wells and both fits.
    pub fn worst_slope(&self) -> Option<f64> {
        self.value_decay
            .iter()
            .chain(&self.gradient_decay)
            .filter_map(|f| f.slope)
            .reduce(f64::max)
    }
}

const MIN_BIN_SAMPLES: usize = 5;
const ZERO: f64 = 1e-14;

fn decay_fit(samples: &[(f64, f64)], lo: f64, hi: f64, width: f64) -> DecayFit {
    let count = ((hi - lo) / width).round().max(1.0) as usize;
    let mut bins = vec![(0usize, 0.0f64); count];
    for &(d, v) in samples {
        if d < lo || d >= hi {
            continue;
        }
        let b = (((d - lo) / width) as usize).min(count - 1);
        bins[b].0 += 1;
        bins[b].1 = bins[b].1.max(v);
    }
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    let mut any_nonzero = false;
    for (b, &(c, m)) in bins.iter().enumerate() {
        let centre = lo + (b as f64 + 0.5) * width;
        any_nonzero |= m > ZERO;
        if c < MIN_BIN_SAMPLES || m <= ZERO {
            skipped.push(centre);
        } else {
            kept.push(DecayBin {
                centre,
                samples: c,
                max: m,
            });
        }
    }
    let degenerate = !any_nonzero;
    let xs: Vec<f64> = kept.iter().map(|b| b.centre).collect();
    let ys: Vec<f64> = kept.iter().map(|b| b.max.ln()).collect();
    let fit: Option<LineFit> = fit_line(&xs, &ys);
    DecayFit {
        bins: kept,
        skipped,
        slope: fit.map(|f| f.slope),
        prefactor: fit.map(|f| f.intercept.exp()),
        degenerate,
    }
}

/// Bins every node of each region by its distance to the region boundary and
/// fits the decay of `|u − a_i|` and `|∇u|` over `[d_lo, d_hi)`.
pub fn check_hypothesis1(field: &GridField, phase: &PhaseMap, d_lo: f64, d_hi: f64, bin_width: f64) -> Result<Hypothesis1Report> {
    if !(d_hi > d_lo && d_lo >= 0.0 && bin_width > 0.0) {
        return Err(invalid("need 0 ≤ d_lo < d_hi and a positive bin width"));
    }
    let mut value_decay = Vec::new();
    let mut gradient_decay = Vec::new();
    for i in 0..field.spec.well_count() {
        let a = field.spec.minima[i];
        let dist = phase.boundary_distance(field, i, d_hi);
        let mut vals = Vec::new();
        let mut grads = Vec::new();
        for j in 0..field.n {
            for ii in 0..field.n {
                let k = field.index(ii, j);
                let Some(d) = dist[k] else { continue };
                vals.push((d, (field.values[k] - a).norm()));
                grads.push((d, field.node_gradient(ii, j).norm()));
            }
        }
        // A region with no interface in reach is entirely degenerate.
        if phase.points.iter().all(|p| p.pair.0 != i && p.pair.1 != i) {
            let all_at_well = (0..field.n * field.n)
                .filter(|&k| phase.labels[k] as usize == i)
                .all(|k| (field.values[k] - a).norm() <= ZERO);
            let fit = DecayFit {
                bins: Vec::new(),
                skipped: Vec::new(),
                slope: None,
                prefactor: None,
                degenerate: all_at_well,
            };
            value_decay.push(fit.clone());
            gradient_decay.push(fit);
            continue;
        }
        value_decay.push(decay_fit(&vals, d_lo, d_hi, bin_width));
        gradient_decay.push(decay_fit(&grads, d_lo, d_hi, bin_width));
    }
    Ok(Hypothesis1Report {
        distance_range: (d_lo, d_hi),
        bin_width,
        value_decay,
        gradient_decay,
    })
}

/// Deviations from the connection profile on the probe line at distance `d`
/// along the interface ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileProbe {
    pub distance: f64,
    /// sup |u − U(s)|.
    pub profile: f64,
    /// sup |∂_s u − U̇(s)| (derivative across the interface).
    pub normal_derivative: f64,
    /// sup |∂_t u| (derivative along the interface).
    pub tangential_derivative: f64,
    /// Probe samples that fell outside the grid.
    pub truncated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis2Report {
    pub ray_angle: f64,
    pub half_length: f64,
    pub probes: Vec<ProfileProbe>,
    /// Index from which each sequence is non-increasing:
    /// `[profile, normal derivative, tangential derivative]`.
    pub onset: [usize; 3],
}

impl Hypothesis2Report {
    /// All three sequences non-increasing from the first probe on.
    pub fn monotone(&self) -> bool {
        self.onset == [0, 0, 0]
    }
}

fn onset(seq: &[f64]) -> usize {
    let mut k = seq.len().saturating_sub(1);
    while k > 0 && seq[k] <= seq[k - 1] {
        k -= 1;
    }
    k
}

/// Compares the field with the connection `U` on lines across the interface
/// ray at angle `ray_angle`, at each distance `d` from the junction. The
/// coordinate across the ray is `s = x · n` with `n = (−sin θ, cos θ)`.
pub fn check_hypothesis2(
    field: &GridField,
    profile: &ProfileInterpolator,
    ray_angle: f64,
    distances: &[f64],
    half_length: f64,
    samples: usize,
) -> Result<Hypothesis2Report> {
    if samples < 2 || !(half_length > 0.0) {
        return Err(invalid("probe needs at least 2 samples and a positive half length"));
    }
    let (sin, cos) = ray_angle.sin_cos();
    let t = crate::Vec3::new(cos, sin, 0.0);
    let nrm = crate::Vec3::new(-sin, cos, 0.0);
    let mut probes = Vec::new();
    for &d in distances {
        let mut probe = ProfileProbe {
            distance: d,
            profile: 0.0,
            normal_derivative: 0.0,
            tangential_derivative: 0.0,
            truncated: 0,
        };
        for k in 0..samples {
            let s = -half_length + 2.0 * half_length * k as f64 / (samples - 1) as f64;
            let p = t * d + nrm * s;
            let (Some(u), Some(g)) = (field.interpolate(p[0], p[1]), field.interpolate_gradient(p[0], p[1])) else {
                probe.truncated += 1;
                continue;
            };
            let (uu, du) = profile.eval(s);
            probe.profile = probe.profile.max((u - uu).norm());
            probe.normal_derivative = probe.normal_derivative.max((g * nrm - du).norm());
            probe.tangential_derivative = probe.tangential_derivative.max((g * t).norm());
        }
        probes.push(probe);
    }
    let seq = |f: fn(&ProfileProbe) -> f64| probes.iter().map(f).collect::<Vec<_>>();
    let onset = [
        onset(&seq(|p| p.profile)),
        onset(&seq(|p| p.normal_derivative)),
        onset(&seq(|p| p.tangential_derivative)),
    ];
    Ok(Hypothesis2Report {
        ray_angle,
        half_length,
        probes,
        onset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ExtrudedProfile, ProfileShape};
    use crate::potential::TripleWellSpec;
    use crate::Vec3;

    #[test]
    fn constant_field_is_degenerate_pass() {
        let spec = TripleWellSpec::equilateral();
        let a = spec.minima[0];
        let f = GridField::from_fn(&spec, 21, 0.5, |_, _| a).unwrap();
        let map = PhaseMap::new(&f);
        let rep = check_hypothesis1(&f, &map, 2.0, 8.0, 0.5).unwrap();
        assert!(rep.value_decay[0].degenerate);
        assert!(rep.passes(-0.5));
    }

    #[test]
    fn tanh_decay_rate_is_sqrt_two() {
        let spec = TripleWellSpec::scalar_quartic();
        let p = ExtrudedProfile::new(&spec, ProfileShape::Tanh, 0.0);
        let f = GridField::from_sampler(&p, 201, 0.1).unwrap();
        let map = PhaseMap::new(&f);
        let rep = check_hypothesis1(&f, &map, 2.0, 8.0, 0.5).unwrap();
        for fit in &rep.value_decay {
            let s = fit.slope.unwrap();
            assert!((s + 2f64.sqrt()).abs() <= 0.1 * 2f64.sqrt(), "slope {s}");
        }
    }

    #[test]
    fn exact_extrusion_matches_the_profile_at_every_distance() {
        let spec = TripleWellSpec::scalar_quartic();
        let n = 801;
        let l = 12.0;
        let values: Vec<Vec3> = (0..n)
            .map(|k| {
                let e = -l + 2.0 * l * k as f64 / (n - 1) as f64;
                Vec3::new((e / 2f64.sqrt()).tanh(), 0.0, 0.0)
            })
            .collect();
        let path = crate::connect::ConnectionPath::from_samples(&spec, l, values, (0, 1)).unwrap();
        // Ray along +y: the normal (−1, 0) makes s = −x, so extrude U(−x).
        let p = ExtrudedProfile::new(&spec, ProfileShape::Tanh, std::f64::consts::PI);
        let f = GridField::from_sampler(&p, 301, 0.1).unwrap();
        let rep = check_hypothesis2(&f, &path.interpolator(), 0.5 * std::f64::consts::PI, &[2.0, 5.0, 10.0], 5.0, 101).unwrap();
        for probe in &rep.probes {
            assert!(probe.profile < 2e-3, "{probe:?}");
            assert!(probe.normal_derivative < 5e-3, "{probe:?}");
            assert!(probe.tangential_derivative < 1e-12, "{probe:?}");
            assert_eq!(probe.truncated, 0);
        }
    }
}
