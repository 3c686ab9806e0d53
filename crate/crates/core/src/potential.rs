//! Triple-well potentials `W: ℝ³ → ℝ` and numerical checks of their
//! structural assumptions (zero set, nondegeneracy, nonnegativity,
//! coercivity, derivative consistency).

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::{Mat3, Vec3};

/// Family of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialForm {
    /// `W(u) = Π_i |u − a_i|²` over the three minima.
    Product,
    /// `W(u) = ¼(1 − u₁²)² + u₂² + u₃²`, two wells at `(±1, 0, 0)`.
    ScalarQuartic,
}

impl PotentialForm {
    /// Numeric tag stored in field snapshots.
    pub fn tag(self) -> u32 {
        match self {
            PotentialForm::Product => 1,
            PotentialForm::ScalarQuartic => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            1 => Some(PotentialForm::Product),
            2 => Some(PotentialForm::ScalarQuartic),
            _ => None,
        }
    }
}

/// A multi-well potential together with its minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleWellSpec {
    pub form: PotentialForm,
    pub minima: Vec<Vec3>,
}

/// Vertices of the unit equilateral triangle in `{u₃ = 0}`, centred at the
/// origin, listed counterclockwise starting on the positive `u₂` axis.
pub fn equilateral_minima() -> [Vec3; 3] {
    let r = 1.0 / 3f64.sqrt();
    let at = |k: usize| {
        let a = 0.5 * PI + 2.0 * PI * k as f64 / 3.0;
        Vec3::new(r * a.cos(), r * a.sin(), 0.0)
    };
    [at(0), at(1), at(2)]
}

/// Rotation about the `u₃` axis by `angle`.
pub fn rotation_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn check_finite(u: &Vec3) -> Result<()> {
    if u.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("non-finite order parameter {:?}", u.as_slice())))
    }
}

impl TripleWellSpec {
    /// Product potential with minima at the unit equilateral triangle.
    pub fn equilateral() -> Self {
        Self::product(equilateral_minima())
    }

    /// Product potential with user-given minima.
    pub fn product(minima: [Vec3; 3]) -> Self {
        Self {
            form: PotentialForm::Product,
            minima: minima.to_vec(),
        }
    }

    /// The embedded scalar quartic double well.
    pub fn scalar_quartic() -> Self {
        Self {
            form: PotentialForm::ScalarQuartic,
            minima: vec![Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)],
        }
    }

    pub fn well_count(&self) -> usize {
        self.minima.len()
    }

    pub fn minimum(&self, i: usize) -> Result<Vec3> {
        self.minima
            .get(i)
            .copied()
            .ok_or_else(|| invalid(format!("minimum index {i} out of range ({} wells)", self.minima.len())))
    }

    pub fn centroid(&self) -> Vec3 {
        self.minima.iter().sum::<Vec3>() / self.minima.len() as f64
    }

    /// `W(u)` without input validation.
    #[inline]
    pub fn w(&self, u: &Vec3) -> f64 {
        match self.form {
            PotentialForm::Product => {
                let m = &self.minima;
                (u - m[0]).norm_squared() * (u - m[1]).norm_squared() * (u - m[2]).norm_squared()
            }
            PotentialForm::ScalarQuartic => {
                let s = 1.0 - u[0] * u[0];
                0.25 * s * s + u[1] * u[1] + u[2] * u[2]
            }
        }
    }

    /// `∇_u W(u)` without input validation.
    #[inline]
    pub fn grad(&self, u: &Vec3) -> Vec3 {
        match self.form {
            PotentialForm::Product => {
                let m = &self.minima;
                let (e1, e2, e3) = (u - m[0], u - m[1], u - m[2]);
                let (d1, d2, d3) = (e1.norm_squared(), e2.norm_squared(), e3.norm_squared());
                2.0 * (e1 * (d2 * d3) + e2 * (d1 * d3) + e3 * (d1 * d2))
            }
            PotentialForm::ScalarQuartic => Vec3::new(u[0] * u[0] * u[0] - u[0], 2.0 * u[1], 2.0 * u[2]),
        }
    }

    /// `∂²W(u)` without input validation.
    pub fn hess(&self, u: &Vec3) -> Mat3 {
        match self.form {
            PotentialForm::Product => {
                let m = &self.minima;
                let (e1, e2, e3) = (u - m[0], u - m[1], u - m[2]);
                let (d1, d2, d3) = (e1.norm_squared(), e2.norm_squared(), e3.norm_squared());
                let (g1, g2, g3) = (2.0 * e1, 2.0 * e2, 2.0 * e3);
                let sym = |a: &Vec3, b: &Vec3| a * b.transpose() + b * a.transpose();
                Mat3::identity() * (2.0 * (d2 * d3 + d1 * d3 + d1 * d2))
                    + sym(&g1, &g2) * d3
                    + sym(&g1, &g3) * d2
                    + sym(&g2, &g3) * d1
            }
            PotentialForm::ScalarQuartic => Mat3::from_diagonal(&Vec3::new(3.0 * u[0] * u[0] - 1.0, 2.0, 2.0)),
        }
    }

    pub fn eval_w(&self, u: &Vec3) -> Result<f64> {
        check_finite(u)?;
        Ok(self.w(u))
    }

    pub fn grad_w(&self, u: &Vec3) -> Result<Vec3> {
        check_finite(u)?;
        Ok(self.grad(u))
    }

    pub fn hess_w(&self, u: &Vec3) -> Result<Mat3> {
        check_finite(u)?;
        Ok(self.hess(u))
    }

    /// Largest Hessian eigenvalue over the minima (curvature of the wells).
    pub fn max_well_curvature(&self) -> f64 {
        self.minima
            .iter()
            .map(|a| SymmetricEigen::new(self.hess(a)).eigenvalues.max())
            .fold(0.0, f64::max)
    }

    /// Runs every structural check with the default probe settings.
    pub fn validate(&self) -> ValidationReport {
        self.validate_with(&ValidationSettings::default())
    }

    pub fn validate_with(&self, settings: &ValidationSettings) -> ValidationReport {
        let mut checks = Vec::new();
        let scale = self
            .minima
            .iter()
            .flat_map(|a| self.minima.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max)
            .max(1.0);

        // Zero at the minima and critical points there.
        let zero = self
            .minima
            .iter()
            .map(|a| self.w(a).abs().max(self.grad(a).norm()))
            .fold(0.0, f64::max);
        checks.push(Check::new("zero_at_minima", zero <= 1e-12, zero, "max(|W(a_i)|, |∇W(a_i)|)"));

        // Distinct minima and positive-definite Hessians.
        let mut min_sep = f64::INFINITY;
        for i in 0..self.minima.len() {
            for j in i + 1..self.minima.len() {
                min_sep = min_sep.min((self.minima[i] - self.minima[j]).norm());
            }
        }
        let min_eig = self
            .minima
            .iter()
            .map(|a| SymmetricEigen::new(self.hess(a)).eigenvalues.min())
            .fold(f64::INFINITY, f64::min);
        checks.push(Check::new(
            "nondegenerate_minima",
            min_sep > 1e-8 && min_eig > 1e-10,
            min_eig,
            "smallest Hessian eigenvalue over the minima",
        ));

        // Nonnegativity on a random cloud.
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        let cloud: Vec<Vec3> = (0..settings.cloud_size)
            .map(|_| random_in_ball(&mut rng, settings.cloud_radius))
            .collect();
        let min_w = cloud.iter().map(|u| self.w(u)).fold(f64::INFINITY, f64::min);
        checks.push(Check::new("nonnegative", min_w >= 0.0, min_w, "min W over the sample cloud"));

        // Coercivity probe on spheres about the centroid.
        let centre = self.centroid();
        let mut sphere_minima = Vec::new();
        for &rho in &settings.coercivity_radii {
            let r = rho * scale;
            let m = fibonacci_sphere(settings.sphere_points)
                .iter()
                .map(|d| self.w(&(centre + d * r)))
                .fold(f64::INFINITY, f64::min);
            sphere_minima.push(m);
        }
        let coercive_bound = sphere_minima.last().copied().unwrap_or(0.0);
        let coercive = sphere_minima.iter().all(|&m| m > 0.0);
        checks.push(Check::new(
            "coercivity_probe",
            coercive,
            coercive_bound,
            "min W on the outermost probe sphere",
        ));

        // Gradient and Hessian against central differences.
        let step = settings.fd_step;
        let mut grad_err: f64 = 0.0;
        let mut hess_err: f64 = 0.0;
        for u in &cloud {
            let g = self.grad(u);
            let h = self.hess(u);
            let mut g_fd = Vec3::zeros();
            let mut h_fd = Mat3::zeros();
            for k in 0..3 {
                let mut e = Vec3::zeros();
                e[k] = step;
                g_fd[k] = (self.w(&(u + e)) - self.w(&(u - e))) / (2.0 * step);
                let col = (self.grad(&(u + e)) - self.grad(&(u - e))) / (2.0 * step);
                h_fd.set_column(k, &col);
            }
            grad_err = grad_err.max((g - g_fd).norm() / g.norm().max(1.0));
            hess_err = hess_err.max((h - h_fd).norm() / h.norm().max(1.0));
        }
        checks.push(Check::new(
            "gradient_consistency",
            grad_err <= settings.fd_tolerance,
            grad_err,
            "max relative error of ∇W against central differences",
        ));
        checks.push(Check::new(
            "hessian_consistency",
            hess_err <= settings.fd_tolerance,
            hess_err,
            "max relative error of ∂²W against central differences",
        ));

        let passed = checks.iter().all(|c| c.passed);
        ValidationReport {
            form: self.form,
            checks,
            coercivity_lower_bound: coercive_bound,
            coercivity_sphere_minima: sphere_minima,
            passed,
        }
    }
}

/// Probe settings for [`TripleWellSpec::validate_with`].
#[derive(Debug, Clone)]
pub struct ValidationSettings {
    pub seed: u64,
    pub cloud_size: usize,
    pub cloud_radius: f64,
    /// Probe radii in units of the largest distance between minima.
    pub coercivity_radii: Vec<f64>,
    pub sphere_points: usize,
    pub fd_step: f64,
    pub fd_tolerance: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            seed: 7,
            cloud_size: 1000,
            cloud_radius: 10.0,
            coercivity_radii: vec![4.0, 8.0, 16.0],
            sphere_points: 400,
            fd_step: 1e-5,
            fd_tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, value: f64, detail: &str) -> Self {
        Self {
            name: name.to_string(),
            passed,
            value,
            detail: detail.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub form: PotentialForm,
    pub checks: Vec<Check>,
    /// Sampled lower bound of `W` on the outermost probe sphere.
    pub coercivity_lower_bound: f64,
    pub coercivity_sphere_minima: Vec<f64>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub(crate) fn random_in_ball<R: Rng>(rng: &mut R, radius: f64) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm_squared() <= 1.0 {
            return v * radius;
        }
    }
}

fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}
