//! Phase labels and diffuse-interface locations.
//!
//! A node belongs to `C_i` when `a_i` is the nearest well. Interface points
//! of `Γ_ij` are the zeros of `|u − a_i| − |u − a_j|` located by linear
//! interpolation along grid edges whose end labels are `i` and `j`, kept only
//! when `a_k` is not closer at the crossing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::GridField;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfacePoint {
    pub x: f64,
    pub y: f64,
    /// Wells `(i, j)` with `i < j`.
    pub pair: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMap {
    pub n: usize,
    pub spacing: f64,
    pub labels: Vec<u8>,
    pub wells: usize,
    pub points: Vec<InterfacePoint>,
}

fn nearest(minima: &[Vec3], u: &Vec3) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, a) in minima.iter().enumerate() {
        let d = (u - a).norm_squared();
        if d < best.1 {
            best = (k, d);
        }
    }
    best.0
}

impl PhaseMap {
    pub fn new(field: &GridField) -> Self {
        let minima = &field.spec.minima;
        let labels: Vec<u8> = field.values.iter().map(|u| nearest(minima, u) as u8).collect();
        let n = field.n;
        let mut points = Vec::new();
        let mut edge = |k0: usize, k1: usize, p0: (f64, f64), p1: (f64, f64)| {
            let (a, b) = (labels[k0] as usize, labels[k1] as usize);
            if a == b {
                return;
            }
            let (u0, u1) = (field.values[k0], field.values[k1]);
            let g = |u: &Vec3| (u - minima[a]).norm() - (u - minima[b]).norm();
            let (g0, g1) = (g(&u0), g(&u1));
            if !(g0 <= 0.0 && g1 >= 0.0) || g0 == g1 {
                return;
            }
            let t = g0 / (g0 - g1);
            let u = u0 * (1.0 - t) + u1 * t;
            let da = (u - minima[a]).norm();
            let third_closer = minima
                .iter()
                .enumerate()
                .any(|(k, m)| k != a && k != b && (u - m).norm() < da - 1e-12);
            if third_closer {
                return;
            }
            points.push(InterfacePoint {
                x: p0.0 + t * (p1.0 - p0.0),
                y: p0.1 + t * (p1.1 - p0.1),
                pair: (a.min(b), a.max(b)),
            });
        };
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                if i + 1 < n {
                    edge(k, k + 1, field.position(i, j), field.position(i + 1, j));
                }
                if j + 1 < n {
                    edge(k, k + n, field.position(i, j), field.position(i, j + 1));
                }
            }
        }
        Self {
            n,
            spacing: field.spacing,
            labels,
            wells: minima.len(),
            points,
        }
    }

    pub fn label(&self, i: usize, j: usize) -> usize {
        self.labels[j * self.n + i] as usize
    }

    /// Node count per label.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.wells];
        for &l in &self.labels {
            c[l as usize] += 1;
        }
        c
    }

    /// Mask of the nodes in `C_i`.
    pub fn mask(&self, i: usize) -> Vec<bool> {
        self.labels.iter().map(|&l| l as usize == i).collect()
    }

    pub fn interface(&self, i: usize, j: usize) -> Vec<InterfacePoint> {
        let pair = (i.min(j), i.max(j));
        self.points.iter().copied().filter(|p| p.pair == pair).collect()
    }

    /// Distance from each node of `C_i` to `∂C_i` (the interface points
    /// bounding it), `None` for other nodes or beyond `max_distance`.
    pub fn boundary_distance(&self, field: &GridField, i: usize, max_distance: f64) -> Vec<Option<f64>> {
        let cell = max_distance.max(self.spacing) / 4.0;
        let mut buckets: HashMap<(i64, i64), Vec<(f64, f64)>> = HashMap::new();
        for p in self.points.iter().filter(|p| p.pair.0 == i || p.pair.1 == i) {
            let key = ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
            buckets.entry(key).or_default().push((p.x, p.y));
        }
        let reach = (max_distance / cell).ceil() as i64 + 1;
        let n = self.n;
        let mut out = vec![None; n * n];
        for j in 0..n {
            for ii in 0..n {
                if self.label(ii, j) != i {
                    continue;
                }
                let (x, y) = field.position(ii, j);
                let (cx, cy) = ((x / cell).floor() as i64, (y / cell).floor() as i64);
                let mut best = f64::INFINITY;
                for dy in -reach..=reach {
                    for dx in -reach..=reach {
                        if let Some(pts) = buckets.get(&(cx + dx, cy + dy)) {
                            for &(px, py) in pts {
                                best = best.min((px - x).hypot(py - y));
                            }
                        }
                    }
                }
                if best <= max_distance {
                    out[j * n + ii] = Some(best);
                }
            }
        }
        out
    }
}
