//! Planar order-parameter fields `u: ℝ² → ℝ³` on square grids.
//!
//! Nodes sit at `x = −X + i h`, `y = −X + j h` for `i, j ∈ [0, n)`, with
//! `X = (n − 1) h / 2`, stored row-major (`index = j n + i`). The third
//! spatial direction is the spine; every 3D query ignores `x₃`.

mod ansatz;
mod hypotheses;
mod phase;
mod relax;
mod sampler;
mod snapshot;
mod symmetry;

pub use ansatz::{init_triod, ray_order_check, TriodAnsatz, TubeParams, MIN_RAY_GAP_DEG};
pub use hypotheses::{check_hypothesis1, check_hypothesis2, DecayBin, DecayFit, Hypothesis1Report, Hypothesis2Report, ProfileProbe};
pub use phase::{InterfacePoint, PhaseMap};
pub use relax::{discrete_energy, pde_residual, relax, RelaxParams, RelaxReport};
pub use sampler::{ConstantSampler, ExtrudedProfile, FarField, FieldSampler, ProfileShape, RotatedSampler};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotMeta, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use symmetry::{equivariance_defect, EquivarianceReport};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::potential::TripleWellSpec;
use crate::{Mat3, Vec3};

/// A sampled planar field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    /// Nodes per side.
    pub n: usize,
    pub spacing: f64,
    pub values: Vec<Vec3>,
    pub spec: TripleWellSpec,
    /// sup over interior nodes of `|Δ_h u − ∇W(u)|`.
    pub residual_norm: f64,
}

impl GridField {
    /// A field with every node set by `f(x, y)`.
    pub fn from_fn(spec: &TripleWellSpec, n: usize, spacing: f64, mut f: impl FnMut(f64, f64) -> Vec3) -> Result<Self> {
        if n < 3 {
            return Err(invalid("a grid needs at least 3 nodes per side"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(invalid("grid spacing must be positive"));
        }
        let extent = 0.5 * (n - 1) as f64 * spacing;
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            let y = -extent + j as f64 * spacing;
            for i in 0..n {
                values.push(f(-extent + i as f64 * spacing, y));
            }
        }
        if values.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(invalid("field values must be finite"));
        }
        let mut field = Self {
            n,
            spacing,
            values,
            spec: spec.clone(),
            residual_norm: 0.0,
        };
        field.residual_norm = pde_residual(&field);
        Ok(field)
    }

    /// A field sampled from any sampler at `x₃ = 0`.
    pub fn from_sampler(sampler: &dyn FieldSampler, n: usize, spacing: f64) -> Result<Self> {
        let mut err = None;
        let field = Self::from_fn(sampler.potential(), n, spacing, |x, y| match sampler.value(&Vec3::new(x, y, 0.0)) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                Vec3::zeros()
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        field
    }

    /// Half-extent `X` of the square `[−X, X]²`.
    pub fn extent(&self) -> f64 {
        0.5 * (self.n - 1) as f64 * self.spacing
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        -self.extent() + k as f64 * self.spacing
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        (self.coord(i), self.coord(j))
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Vec3 {
        self.values[j * self.n + i]
    }

    /// `sup |u|` over all nodes (the recorded field bound).
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Second-order gradient at a node: central in the interior, one-sided at
    /// the edges. Column `k` is `∂u/∂x_k`; the spine column is zero.
    pub fn node_gradient(&self, i: usize, j: usize) -> Mat3 {
        let h = self.spacing;
        let n = self.n;
        let d = |f: &dyn Fn(usize) -> Vec3, k: usize| -> Vec3 {
            if k == 0 {
                (4.0 * (f(1) - f(0)) - (f(2) - f(0))) / (2.0 * h)
            } else if k == n - 1 {
                (4.0 * (f(n - 1) - f(n - 2)) - (f(n - 1) - f(n - 3))) / (2.0 * h)
            } else {
                (f(k + 1) - f(k - 1)) / (2.0 * h)
            }
        };
        let gx = d(&|a| self.at(a, j), i);
        let gy = d(&|b| self.at(i, b), j);
        Mat3::from_columns(&[gx, gy, Vec3::zeros()])
    }

    /// Five-point Laplacian at an interior node.
    #[inline]
    pub fn laplacian(&self, i: usize, j: usize) -> Vec3 {
        let k = self.index(i, j);
        let n = self.n;
        let v = &self.values;
        (v[k - 1] + v[k + 1] + v[k - n] + v[k + n] - 4.0 * v[k]) / (self.spacing * self.spacing)
    }

    /// Bilinear interpolation of values, `None` outside the grid.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<Vec3> {
        let (i, j, tx, ty) = self.cell(x, y)?;
        let v = |a, b| self.at(a, b);
        Some(
            v(i, j) * ((1.0 - tx) * (1.0 - ty))
                + v(i + 1, j) * (tx * (1.0 - ty))
                + v(i, j + 1) * ((1.0 - tx) * ty)
                + v(i + 1, j + 1) * (tx * ty),
        )
    }

    /// Bilinear interpolation of the node gradients, `None` outside the grid.
    pub fn interpolate_gradient(&self, x: f64, y: f64) -> Option<Mat3> {
        let (i, j, tx, ty) = self.cell(x, y)?;
        let g = |a, b| self.node_gradient(a, b);
        Some(
            g(i, j) * ((1.0 - tx) * (1.0 - ty))
                + g(i + 1, j) * (tx * (1.0 - ty))
                + g(i, j + 1) * ((1.0 - tx) * ty)
                + g(i + 1, j + 1) * (tx * ty),
        )
    }

    /// Lower-left node of the cell containing `(x, y)` and local coordinates.
    fn cell(&self, x: f64, y: f64) -> Option<(usize, usize, f64, f64)> {
        let ext = self.extent();
        if !(x.abs() <= ext && y.abs() <= ext) {
            return None;
        }
        // Snap to nodes so that node queries return stored values exactly.
        let snap = |s: f64| if (s - s.round()).abs() < 1e-9 { s.round() } else { s };
        let sx = snap((x + ext) / self.spacing);
        let sy = snap((y + ext) / self.spacing);
        let i = (sx.floor() as usize).min(self.n - 2);
        let j = (sy.floor() as usize).min(self.n - 2);
        Some((i, j, sx - i as f64, sy - j as f64))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let ext = self.extent();
        x.abs() <= ext && y.abs() <= ext
    }

    /// Interior nodes as `(i, j)` pairs.
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.n - 1).flat_map(move |j| (1..self.n - 1).map(move |i| (i, j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_row_major_and_centred() {
        let spec = TripleWellSpec::equilateral();
        let f = GridField::from_fn(&spec, 5, 0.5, |x, y| Vec3::new(x, y, 0.0)).unwrap();
        assert_eq!(f.extent(), 1.0);
        assert_eq!(f.at(0, 0), Vec3::new(-1.0, -1.0, 0.0));
        assert_eq!(f.values[f.index(3, 1)], Vec3::new(0.5, -0.5, 0.0));
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_for_bilinear_data() {
        let spec = TripleWellSpec::equilateral();
        let f = GridField::from_fn(&spec, 9, 0.25, |x, y| Vec3::new(x * y + 2.0 * x, y, 1.0)).unwrap();
        for (i, j) in [(0, 0), (3, 5), (8, 8)] {
            let (x, y) = f.position(i, j);
            assert_eq!(f.interpolate(x, y).unwrap(), f.at(i, j));
        }
        let (x, y) = (0.13, -0.71);
        let v = f.interpolate(x, y).unwrap();
        assert!((v - Vec3::new(x * y + 2.0 * x, y, 1.0)).norm() < 1e-14);
        assert!(f.interpolate(1.01, 0.0).is_none());
    }

    #[test]
    fn node_gradient_is_exact_for_quadratics() {
        let spec = TripleWellSpec::equilateral();
        let f = GridField::from_fn(&spec, 7, 0.3, |x, y| Vec3::new(x * x, x * y, y * y)).unwrap();
        for (i, j) in [(0, 0), (3, 2), (6, 6)] {
            let (x, y) = f.position(i, j);
            let g = f.node_gradient(i, j);
            let exact = Mat3::new(2.0 * x, 0.0, 0.0, y, x, 0.0, 0.0, 2.0 * y, 0.0);
            assert!((g - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let spec = TripleWellSpec::equilateral();
        assert!(GridField::from_fn(&spec, 2, 0.1, |_, _| Vec3::zeros()).is_err());
        assert!(GridField::from_fn(&spec, 5, 0.0, |_, _| Vec3::zeros()).is_err());
        assert!(GridField::from_fn(&spec, 5, 0.1, |_, _| Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
    }
}
