//! Point samplers of spine-extruded fields `u(x₁, x₂, x₃) = u(x₁, x₂)`.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use crate::connect::ProfileInterpolator;
use crate::error::{invalid, Error, Result};
use crate::potential::TripleWellSpec;
use crate::{Mat3, Vec3};

use super::ansatz::TriodAnsatz;
use super::GridField;

/// A field that can be evaluated, with its gradient, at points of ℝ³.
///
/// The gradient's column `k` is `∂u/∂x_k`.
pub trait FieldSampler: Send + Sync {
    fn potential(&self) -> &TripleWellSpec;

    fn value(&self, x: &Vec3) -> Result<Vec3>;

    fn gradient(&self, x: &Vec3) -> Result<Mat3>;

    fn sample(&self, x: &Vec3) -> Result<(Vec3, Mat3)> {
        Ok((self.value(x)?, self.gradient(x)?))
    }
}

/// `u ≡ c`.
#[derive(Debug, Clone)]
pub struct ConstantSampler {
    pub spec: TripleWellSpec,
    pub value: Vec3,
}

impl FieldSampler for ConstantSampler {
    fn potential(&self) -> &TripleWellSpec {
        &self.spec
    }

    fn value(&self, _: &Vec3) -> Result<Vec3> {
        Ok(self.value)
    }

    fn gradient(&self, _: &Vec3) -> Result<Mat3> {
        Ok(Mat3::zeros())
    }
}

/// One-dimensional profile shapes for [`ExtrudedProfile`].
#[derive(Debug, Clone)]
pub enum ProfileShape {
    /// `(tanh(η/√2), 0, 0)`, the connection of the scalar quartic well.
    Tanh,
    Sampled(ProfileInterpolator),
}

impl ProfileShape {
    pub fn eval(&self, eta: f64) -> (Vec3, Vec3) {
        match self {
            Self::Tanh => {
                let t = (eta / SQRT_2).tanh();
                (Vec3::new(t, 0.0, 0.0), Vec3::new((1.0 - t * t) / SQRT_2, 0.0, 0.0))
            }
            Self::Sampled(p) => p.eval(eta),
        }
    }
}

/// `u(x) = U(x · n − offset)` with `n = (cos angle, sin angle, 0)`; the
/// gradient is exact (`U̇ nᵀ`).
#[derive(Debug, Clone)]
pub struct ExtrudedProfile {
    pub spec: TripleWellSpec,
    pub shape: ProfileShape,
    pub angle: f64,
    pub offset: f64,
}

impl ExtrudedProfile {
    pub fn new(spec: &TripleWellSpec, shape: ProfileShape, angle: f64) -> Self {
        Self {
            spec: spec.clone(),
            shape,
            angle,
            offset: 0.0,
        }
    }

    fn normal(&self) -> Vec3 {
        Vec3::new(self.angle.cos(), self.angle.sin(), 0.0)
    }
}

impl FieldSampler for ExtrudedProfile {
    fn potential(&self) -> &TripleWellSpec {
        &self.spec
    }

    fn value(&self, x: &Vec3) -> Result<Vec3> {
        let n = self.normal();
        Ok(self.shape.eval(n[0] * x[0] + n[1] * x[1] - self.offset).0)
    }

    fn gradient(&self, x: &Vec3) -> Result<Mat3> {
        let n = self.normal();
        let (_, d) = self.shape.eval(n[0] * x[0] + n[1] * x[1] - self.offset);
        Ok(d * n.transpose())
    }

    fn sample(&self, x: &Vec3) -> Result<(Vec3, Mat3)> {
        let n = self.normal();
        let (v, d) = self.shape.eval(n[0] * x[0] + n[1] * x[1] - self.offset);
        Ok((v, d * n.transpose()))
    }
}

/// A grid field as a sampler: bilinear interpolation of node values and node
/// gradients; a domain error outside the grid.
impl FieldSampler for GridField {
    fn potential(&self) -> &TripleWellSpec {
        &self.spec
    }

    fn value(&self, x: &Vec3) -> Result<Vec3> {
        self.interpolate(x[0], x[1]).ok_or(Error::Domain {
            x: x[0],
            y: x[1],
            z: x[2],
        })
    }

    fn gradient(&self, x: &Vec3) -> Result<Mat3> {
        self.interpolate_gradient(x[0], x[1]).ok_or(Error::Domain {
            x: x[0],
            y: x[1],
            z: x[2],
        })
    }
}

/// Grid inside, triod ansatz outside: defined on all of ℝ².
#[derive(Debug, Clone)]
pub struct FarField {
    pub grid: Arc<GridField>,
    pub ansatz: Arc<TriodAnsatz>,
}

impl FarField {
    pub fn new(grid: Arc<GridField>, ansatz: Arc<TriodAnsatz>) -> Self {
        Self { grid, ansatz }
    }

    /// Largest jump of the value across the grid boundary, probed at
    /// `samples` points per side just inside and just outside the edge.
    pub fn boundary_jump(&self, samples: usize) -> f64 {
        let ext = self.grid.extent();
        let eps = 1e-9 * ext.max(1.0);
        let mut worst: f64 = 0.0;
        for k in 0..samples {
            let t = -ext + (k as f64 + 0.5) * 2.0 * ext / samples as f64;
            for (x, y, ox, oy) in [(t, ext, 0.0, 1.0), (t, -ext, 0.0, -1.0), (ext, t, 1.0, 0.0), (-ext, t, -1.0, 0.0)] {
                let inside = self.grid.interpolate(x - ox * eps, y - oy * eps).expect("inside the grid");
                let outside = self.ansatz.eval(x + ox * eps, y + oy * eps);
                worst = worst.max((inside - outside).norm());
            }
        }
        worst
    }
}

impl FieldSampler for FarField {
    fn potential(&self) -> &TripleWellSpec {
        &self.grid.spec
    }

    fn value(&self, x: &Vec3) -> Result<Vec3> {
        Ok(self
            .grid
            .interpolate(x[0], x[1])
            .unwrap_or_else(|| self.ansatz.eval(x[0], x[1])))
    }

    fn gradient(&self, x: &Vec3) -> Result<Mat3> {
        match self.grid.interpolate_gradient(x[0], x[1]) {
            Some(g) => Ok(g),
            None => self.ansatz.gradient(x),
        }
    }
}

/// The field `u'(y) = u(Qᵀ y)` expressed in rotated coordinates, with its
/// gradient taken by central differences along the rotated axes.
pub struct RotatedSampler<'a> {
    pub inner: &'a dyn FieldSampler,
    pub rotation: Mat3,
    pub step: f64,
}

impl<'a> RotatedSampler<'a> {
    pub fn new(inner: &'a dyn FieldSampler, rotation: Mat3, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(invalid("finite-difference step must be positive"));
        }
        Ok(Self { inner, rotation, step })
    }
}

impl FieldSampler for RotatedSampler<'_> {
    fn potential(&self) -> &TripleWellSpec {
        self.inner.potential()
    }

    fn value(&self, y: &Vec3) -> Result<Vec3> {
        self.inner.value(&(self.rotation.transpose() * y))
    }

    fn gradient(&self, y: &Vec3) -> Result<Mat3> {
        let mut g = Mat3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = self.step;
            let d = (self.value(&(y + e))? - self.value(&(y - e))?) / (2.0 * self.step);
            g.set_column(k, &d);
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connect::{solve_triple, ConnectionParams};
    use crate::field::{init_triod, TubeParams};

    #[test]
    fn grid_sampler_errors_outside() {
        let spec = TripleWellSpec::equilateral();
        let f = GridField::from_fn(&spec, 5, 1.0, |_, _| Vec3::zeros()).unwrap();
        assert!(matches!(f.value(&Vec3::new(3.0, 0.0, 0.0)), Err(Error::Domain { .. })));
        assert!(f.value(&Vec3::new(2.0, -2.0, 100.0)).is_ok());
    }

    #[test]
    fn far_field_matches_nodes_and_ansatz() {
        let spec = TripleWellSpec::equilateral();
        let c = solve_triple(&spec, &ConnectionParams { samples: 401, ..Default::default() }).unwrap();
        let rays = [90f64, 210.0, 330.0].map(f64::to_radians);
        let (grid, ansatz) = init_triod(&spec, &c, rays, 81, 0.25, TubeParams::default()).unwrap();
        let ff = FarField::new(Arc::new(grid.clone()), Arc::new(ansatz.clone()));
        let (x, y) = grid.position(17, 60);
        assert_eq!(ff.value(&Vec3::new(x, y, 5.0)).unwrap(), grid.at(17, 60));
        // Deep in C2 outside the grid.
        let p = 50.0 * Vec3::new(150f64.to_radians().cos(), 150f64.to_radians().sin(), 0.0);
        assert!((ff.value(&p).unwrap() - spec.minima[1]).norm() < 1e-12);
        // On the ray Γ12 beyond the grid, at signed distance s.
        for s in [-3.0, 0.0, 2.5] {
            let v = ff.value(&Vec3::new(-s, 40.0, 0.0)).unwrap();
            let (u, _) = c[0].interpolator().eval(s);
            assert!((v - u).norm() < 1e-8, "s = {s}");
        }
        assert!(ff.boundary_jump(64) < 1e-2);
    }

    #[test]
    fn extruded_tanh_gradient_is_exact() {
        let spec = TripleWellSpec::scalar_quartic();
        let p = ExtrudedProfile::new(&spec, ProfileShape::Tanh, 0.3);
        let x = Vec3::new(0.4, -0.2, 7.0);
        let g = p.gradient(&x).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            let fd = (p.value(&(x + e)).unwrap() - p.value(&(x - e)).unwrap()) / (2.0 * h);
            assert!((fd - g.column(k)).norm() < 1e-8);
        }
    }
}
