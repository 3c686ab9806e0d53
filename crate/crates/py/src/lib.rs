//! Python bindings: potentials, connections, contact-angle algebra, sphere
//! schedules and the command-line pipeline.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use triod_lab::cli;
use triod_lab::connect::{self, ConnectionParams, ConnectionPath};
use triod_lab::flux::{make_surgery_plan, Schedule};
use triod_lab::potential;
use triod_lab::young;
use triod_lab::Vec3;

create_exception!(triod_lab, TriodError, PyException);

fn err(e: triod_lab::Error) -> PyErr {
    TriodError::new_err(e.to_string())
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| TriodError::new_err(e.to_string()))
}

/// A potential with isolated zero-level minima.
#[pyclass(name = "TripleWellSpec", module = "triod_lab", frozen)]
struct PySpec(potential::TripleWellSpec);

#[pymethods]
impl PySpec {
    /// Product potential on the unit equilateral triangle.
    #[staticmethod]
    fn equilateral() -> Self {
        Self(potential::TripleWellSpec::equilateral())
    }

    /// Product potential `Π |u − a_i|²` on the given minima.
    #[staticmethod]
    fn product(minima: [[f64; 3]; 3]) -> Self {
        Self(potential::TripleWellSpec::product(minima.map(Vec3::from)))
    }

    /// `¼(1 − u₁²)² + u₂² + u₃²`.
    #[staticmethod]
    fn scalar_quartic() -> Self {
        Self(potential::TripleWellSpec::scalar_quartic())
    }

    #[getter]
    fn minima(&self) -> Vec<[f64; 3]> {
        self.0.minima.iter().map(|m| [m[0], m[1], m[2]]).collect()
    }

    fn w(&self, u: [f64; 3]) -> f64 {
        self.0.w(&Vec3::from(u))
    }

    fn grad(&self, u: [f64; 3]) -> [f64; 3] {
        let g = self.0.grad(&Vec3::from(u));
        [g[0], g[1], g[2]]
    }

    /// Validation report as JSON.
    fn validate(&self) -> PyResult<String> {
        json(&self.0.validate())
    }

    fn __repr__(&self) -> String {
        format!("TripleWellSpec({:?}, minima={:?})", self.0.form, self.minima())
    }
}

/// A sampled connection `U_ij` on `[−L, L]`.
#[pyclass(name = "Connection", module = "triod_lab", frozen)]
struct PyConnection(ConnectionPath);

#[pymethods]
impl PyConnection {
    #[getter]
    fn action(&self) -> f64 {
        self.0.action
    }

    #[getter]
    fn equipartition_residual(&self) -> f64 {
        self.0.equipartition_residual
    }

    #[getter]
    fn endpoints(&self) -> (usize, usize) {
        self.0.endpoints
    }

    #[getter]
    fn half_length(&self) -> f64 {
        self.0.half_length
    }

    fn eta(&self) -> Vec<f64> {
        (0..self.0.len()).map(|k| self.0.eta(k)).collect()
    }

    fn values(&self) -> Vec<[f64; 3]> {
        self.0.values.iter().map(|v| [v[0], v[1], v[2]]).collect()
    }

    fn el_residual(&self, spec: &PySpec) -> f64 {
        self.0.el_residual(&spec.0)
    }

    fn write_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.0.write_csv(&path).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Connection(endpoints={:?}, action={:.10}, samples={})",
            self.0.endpoints,
            self.0.action,
            self.0.len()
        )
    }
}

fn params(half_length: f64, samples: usize, tolerance: f64, max_iterations: usize) -> ConnectionParams {
    ConnectionParams {
        half_length,
        samples,
        tolerance,
        max_iterations,
        allow_trivial: false,
    }
}

/// Connection from well `i` to well `j`.
#[pyfunction]
#[pyo3(signature = (spec, i, j, half_length=12.0, samples=801, tolerance=1e-8, max_iterations=20000))]
#[allow(clippy::too_many_arguments)]
fn solve_connection(
    py: Python<'_>,
    spec: &PySpec,
    i: usize,
    j: usize,
    half_length: f64,
    samples: usize,
    tolerance: f64,
    max_iterations: usize,
) -> PyResult<PyConnection> {
    let p = params(half_length, samples, tolerance, max_iterations);
    let spec = spec.0.clone();
    py.detach(move || connect::solve_connection(&spec, i, j, &p))
        .map(PyConnection)
        .map_err(err)
}

/// Connections for the pairs (0, 1), (1, 2), (2, 0).
#[pyfunction]
#[pyo3(signature = (spec, half_length=12.0, samples=801, tolerance=1e-8, max_iterations=20000))]
fn solve_triple(
    py: Python<'_>,
    spec: &PySpec,
    half_length: f64,
    samples: usize,
    tolerance: f64,
    max_iterations: usize,
) -> PyResult<Vec<PyConnection>> {
    let p = params(half_length, samples, tolerance, max_iterations);
    let spec = spec.0.clone();
    let paths = py.detach(move || connect::solve_triple(&spec, &p)).map_err(err)?;
    Ok(paths.into_iter().map(PyConnection).collect())
}

/// Region angles `(φ₁, φ₂, φ₃)` in radians balancing `(σ₁₂, σ₂₃, σ₃₁)`.
#[pyfunction]
fn predict_angles(sigma: [f64; 3]) -> PyResult<[f64; 3]> {
    young::predict_angles(sigma).map_err(err)
}

/// Unit conormals of `Γ₁₂, Γ₂₃, Γ₃₁` for region angles `angles`, with
/// `Γ₁₂` at azimuth `theta12`.
#[pyfunction]
fn conormals_from_angles(theta12: f64, angles: [f64; 3]) -> [[f64; 2]; 3] {
    young::conormals_from_angles(theta12, angles)
}

/// `|Σ σ ν| / Σ σ`.
#[pyfunction]
fn balance_residual(sigma: [f64; 3], conormals: [[f64; 2]; 3]) -> PyResult<f64> {
    young::balance_residual(sigma, conormals).map_err(err)
}

/// Relative spread of `sin φ_k / σ_opposite`.
#[pyfunction]
fn sine_spread(angles: [f64; 3], sigma: [f64; 3]) -> f64 {
    young::sine_spread(young::sine_ratios(angles, sigma))
}

/// Angle report of three conormals as JSON.
#[pyfunction]
fn angle_report(conormals: [[f64; 2]; 3], sigma: [f64; 3]) -> PyResult<String> {
    json(&young::AngleReport::from_conormals(conormals, sigma).map_err(err)?)
}

/// `(ψ₁, ψ₂)` at `radius` after checking the strip condition; raises
/// `TriodError` when the schedule is not admissible there. Without
/// coefficients the schedule is `ψ₁ = R^{-4/5}`, `ψ₂ = R^{-3/4}`.
#[pyfunction]
#[pyo3(signature = (radius, c1=None, e1=0.8, c2=None, e2=0.75))]
fn surgery_angles(radius: f64, c1: Option<f64>, e1: f64, c2: Option<f64>, e2: f64) -> PyResult<(f64, f64)> {
    let schedule = match (c1, c2) {
        (None, None) => Schedule::Canonical,
        (c1, c2) => Schedule::Custom {
            c1: c1.unwrap_or(1.0),
            e1,
            c2: c2.unwrap_or(1.0),
            e2,
        },
    };
    let az = [0.5, 0.5 + 2.0 / 3.0, 0.5 + 4.0 / 3.0].map(|t| t * std::f64::consts::PI);
    let plan = make_surgery_plan(radius, schedule, &az, None, 0.5).map_err(err)?;
    Ok((plan.psi1, plan.psi2))
}

/// Runs the command line with `args` (without the program name); returns
/// the exit status.
#[pyfunction]
fn run(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(move || cli::main_with(std::iter::once("triod-lab".to_string()).chain(args)))
}

#[pymodule]
#[pyo3(name = "triod_lab")]
fn triod_lab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", triod_lab::VERSION)?;
    m.add("TriodError", m.py().get_type::<TriodError>())?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyConnection>()?;
    m.add_function(wrap_pyfunction!(solve_connection, m)?)?;
    m.add_function(wrap_pyfunction!(solve_triple, m)?)?;
    m.add_function(wrap_pyfunction!(predict_angles, m)?)?;
    m.add_function(wrap_pyfunction!(conormals_from_angles, m)?)?;
    m.add_function(wrap_pyfunction!(balance_residual, m)?)?;
    m.add_function(wrap_pyfunction!(sine_spread, m)?)?;
    m.add_function(wrap_pyfunction!(angle_report, m)?)?;
    m.add_function(wrap_pyfunction!(surgery_angles, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
