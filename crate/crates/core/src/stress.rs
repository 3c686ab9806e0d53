//! The stress tensor `T(u) = ∇uᵀ∇u − I (½|∇u|² + W(u))`.
//!
//! For smooth `u`, `div T = ∇uᵀ (Δu − ∇W(u))`, so `T` is divergence-free on
//! solutions. Planar fields are always treated as spine extrusions, so
//! `u_,3 = 0` and a single 3×3 type serves both the circle and sphere
//! fluxes.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::connect::ConnectionPath;
use crate::error::{invalid, Result};
use crate::field::{ExtrudedProfile, FieldSampler, GridField, ProfileShape, RotatedSampler};
use crate::potential::TripleWellSpec;
use crate::{Mat3, Vec3};

/// `T` from a value and its gradient (column `k` is `∂u/∂x_k`).
#[inline]
pub fn tensor_from(spec: &TripleWellSpec, u: &Vec3, grad: &Mat3) -> Mat3 {
    let e = 0.5 * grad.norm_squared() + spec.w(u);
    grad.transpose() * grad - Mat3::identity() * e
}

/// `T` of a sampler at a point.
pub fn stress_tensor(sampler: &dyn FieldSampler, x: &Vec3) -> Result<Mat3> {
    let (u, g) = sampler.sample(x)?;
    Ok(tensor_from(sampler.potential(), &u, &g))
}

/// Crude pointwise bound `|T|_F ≤ 2(½|∇u|² + W) + |∇u|²`.
pub fn frobenius_bound(spec: &TripleWellSpec, u: &Vec3, grad: &Mat3) -> f64 {
    let g2 = grad.norm_squared();
    2.0 * (0.5 * g2 + spec.w(u)) + g2
}

/// Per-node tensors of a grid field, built from second-order node gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressTensorField {
    pub n: usize,
    pub spacing: f64,
    pub tensors: Vec<Mat3>,
    /// `|T|_F` never exceeded the crude bound.
    pub frobenius_bound_holds: bool,
    /// Largest `|T|_F` over the nodes.
    pub sup_norm: f64,
}

impl StressTensorField {
    pub fn new(field: &GridField) -> Self {
        let n = field.n;
        let mut tensors = Vec::with_capacity(n * n);
        let mut holds = true;
        let mut sup: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let u = field.at(i, j);
                let g = field.node_gradient(i, j);
                let t = tensor_from(&field.spec, &u, &g);
                let norm = t.norm();
                holds &= norm <= frobenius_bound(&field.spec, &u, &g) * (1.0 + 1e-12);
                sup = sup.max(norm);
                tensors.push(t);
            }
        }
        Self {
            n,
            spacing: field.spacing,
            tensors,
            frobenius_bound_holds: holds,
            sup_norm: sup,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> &Mat3 {
        &self.tensors[j * self.n + i]
    }

    /// Largest asymmetry `|T − Tᵀ|` over the nodes.
    pub fn max_asymmetry(&self) -> f64 {
        self.tensors.iter().map(|t| (t - t.transpose()).amax()).fold(0.0, f64::max)
    }

    /// Central-difference divergence at an interior node:
    /// `(div T)_i = ∂₁T_i1 + ∂₂T_i2`.
    pub fn divergence(&self, i: usize, j: usize) -> Vec3 {
        let h2 = 2.0 * self.spacing;
        let dx = (self.at(i + 1, j) - self.at(i - 1, j)) / h2;
        let dy = (self.at(i, j + 1) - self.at(i, j - 1)) / h2;
        dx.column(0) + dy.column(1)
    }

    pub fn write_csv(&self, field: &GridField, path: &Path, stride: usize) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x1,x2,x3,t11,t12,t13,t22,t23,t33")?;
        let stride = stride.max(1);
        for j in (0..self.n).step_by(stride) {
            for i in (0..self.n).step_by(stride) {
                let (x, y) = field.position(i, j);
                let t = self.at(i, j);
                writeln!(
                    out,
                    "{x:.10e},{y:.10e},0,{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                    t[(0, 0)],
                    t[(0, 1)],
                    t[(0, 2)],
                    t[(1, 1)],
                    t[(1, 2)],
                    t[(2, 2)]
                )?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Divergence of `T` against `∇uᵀ(Δ_h u − ∇W)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub spacing: f64,
    /// sup |div_h T|.
    pub sup_divergence: f64,
    /// sup |∇uᵀ(Δ_h u − ∇W)|.
    pub sup_rhs: f64,
    /// sup |div_h T − ∇uᵀ(Δ_h u − ∇W)|.
    pub sup_gap: f64,
    /// Nodes evaluated.
    pub nodes: usize,
}

/// Evaluates the divergence identity at interior nodes whose distance to the
/// grid edge is at least `margin` nodes (`margin ≥ 1`), optionally only
/// within `|x|, |y| ≤ window`.
pub fn divergence_residual(field: &GridField, margin: usize, window: Option<f64>) -> Result<(DivergenceReport, Vec<Vec3>, Vec<Vec3>)> {
    let n = field.n;
    if margin == 0 || 2 * margin >= n {
        return Err(invalid("margin must be at least 1 and leave interior nodes"));
    }
    let t = StressTensorField::new(field);
    let mut div = vec![Vec3::zeros(); n * n];
    let mut rhs = vec![Vec3::zeros(); n * n];
    let mut rep = DivergenceReport {
        spacing: field.spacing,
        sup_divergence: 0.0,
        sup_rhs: 0.0,
        sup_gap: 0.0,
        nodes: 0,
    };
    for j in margin..n - margin {
        for i in margin..n - margin {
            let (x, y) = field.position(i, j);
            if window.is_some_and(|w| x.abs() > w || y.abs() > w) {
                continue;
            }
            let d = t.divergence(i, j);
            let r = field.node_gradient(i, j).transpose() * (field.laplacian(i, j) - field.spec.grad(&field.at(i, j)));
            let k = field.index(i, j);
            div[k] = d;
            rhs[k] = r;
            rep.sup_divergence = rep.sup_divergence.max(d.norm());
            rep.sup_rhs = rep.sup_rhs.max(r.norm());
            rep.sup_gap = rep.sup_gap.max((d - r).norm());
            rep.nodes += 1;
        }
    }
    Ok((rep, div, rhs))
}

/// Largest componentwise deviation between `Q T(x) Qᵀ` and the tensor of the
/// rotated field `u'(y) = u(Qᵀy)` at `y = Qx`. Both tensors take their
/// gradients by central differences of step `fd_step`, along the original
/// axes and the rotated axes respectively.
pub fn rotate_check(sampler: &dyn FieldSampler, q: &Mat3, points: &[Vec3], fd_step: f64) -> Result<f64> {
    if (q.transpose() * q - Mat3::identity()).amax() > 1e-12 {
        return Err(invalid("rotation matrix is not orthogonal"));
    }
    let original = RotatedSampler::new(sampler, Mat3::identity(), fd_step)?;
    let rotated = RotatedSampler::new(sampler, *q, fd_step)?;
    let mut worst: f64 = 0.0;
    for x in points {
        let t = stress_tensor(&original, x)?;
        let t_rot = stress_tensor(&rotated, &(q * x))?;
        worst = worst.max((q * t * q.transpose() - t_rot).amax());
    }
    Ok(worst)
}

/// `T₁₁` of the extrusion `u(x) = U(x₁)` at every sample of the path.
pub fn connection_t11(spec: &TripleWellSpec, path: &ConnectionPath) -> Result<Vec<f64>> {
    let p = ExtrudedProfile::new(spec, ProfileShape::Sampled(path.interpolator()), 0.0);
    (1..path.len() - 1)
        .map(|k| Ok(stress_tensor(&p, &Vec3::new(path.eta(k), 0.0, 0.0))?[(0, 0)]))
        .collect()
}
