//! Python bindings: geometries, densities, states and the verification
//! helpers. Validation errors raise `ValueError`, numerical failures
//! `ArithmeticError`.

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use sqstates::domain::{ClassicalTarget, IntervalGeometry, StateDescriptor, MASS_HYDROGEN_SI};
use sqstates::error::{Error, ErrorClass};
use sqstates::families::{self, DensitySpec, InnerFamily};
use sqstates::{bounds, cli, moments, specfun};

fn py_err(e: Error) -> PyErr {
    let msg = format!("{}: {e}", cli::error_kind(&e));
    match e.class() {
        ErrorClass::Validation => PyValueError::new_err(msg),
        ErrorClass::Numerical => PyArithmeticError::new_err(msg),
    }
}

/// Interval `[-l, l]` with Planck constant and mass.
#[pyclass(name = "Geometry", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGeometry(IntervalGeometry);

#[pymethods]
impl PyGeometry {
    /// `l = hbar = m = 1`, or any positive values.
    #[new]
    #[pyo3(signature = (l = 1.0, hbar = 1.0, mass = 1.0))]
    fn new(l: f64, hbar: f64, mass: f64) -> PyResult<Self> {
        IntervalGeometry::scaled(l, hbar, mass).map(PyGeometry).map_err(py_err)
    }

    /// SI units: `l` in meters, hydrogen mass by default.
    #[staticmethod]
    #[pyo3(signature = (l, mass = MASS_HYDROGEN_SI))]
    fn si(l: f64, mass: f64) -> PyResult<Self> {
        IntervalGeometry::si(l, mass).map(PyGeometry).map_err(py_err)
    }

    #[getter]
    fn l(&self) -> f64 {
        self.0.l
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.0.hbar
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass
    }

    /// Momentum of the plane wave `k`.
    fn p_k(&self, k: i64) -> f64 {
        self.0.p_k(k)
    }

    fn __repr__(&self) -> String {
        format!("Geometry(l={:e}, hbar={:e}, mass={:e})", self.0.l, self.0.hbar, self.0.mass)
    }
}

/// Even, non-increasing momentum density (in wavenumber units).
#[pyclass(name = "Density", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDensity(DensitySpec);

#[pymethods]
impl PyDensity {
    /// `name` is one of gaussian, laplace, triangular.
    #[new]
    #[pyo3(signature = (name = "gaussian", scale = 1.0))]
    fn new(name: &str, scale: f64) -> PyResult<Self> {
        DensitySpec::by_name(name, scale).map(PyDensity).map_err(py_err)
    }

    fn __call__(&self, q: f64) -> f64 {
        self.0.phi(q)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn std_dev(&self) -> f64 {
        self.0.std_dev()
    }

    #[getter]
    fn peak_value(&self) -> f64 {
        self.0.peak_value
    }
}

/// A state on the interval with its plane-wave coefficients.
#[pyclass(name = "State", frozen)]
struct PyState(StateDescriptor);

fn target(g: &PyGeometry, x_star: f64, p_star: f64) -> PyResult<ClassicalTarget> {
    ClassicalTarget::new(&g.0, x_star, p_star).map_err(py_err)
}

#[pymethods]
impl PyState {
    #[staticmethod]
    #[pyo3(signature = (geometry, alpha, x_star = 0.0, p_star = 0.0))]
    fn theta(geometry: &PyGeometry, alpha: f64, x_star: f64, p_star: f64) -> PyResult<Self> {
        let t = target(geometry, x_star, p_star)?;
        families::build_theta_state(&geometry.0, &t, alpha).map(PyState).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (geometry, beta, epsilon, x_star = 0.0, p_star = 0.0))]
    fn gaussian(geometry: &PyGeometry, beta: f64, epsilon: f64, x_star: f64, p_star: f64) -> PyResult<Self> {
        let t = target(geometry, x_star, p_star)?;
        families::build_truncated_gaussian(&geometry.0, &t, beta, epsilon).map(PyState).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (geometry, density, alpha, x_star = 0.0, p_star = 0.0))]
    fn discretized(geometry: &PyGeometry, density: &PyDensity, alpha: f64, x_star: f64, p_star: f64) -> PyResult<Self> {
        let t = target(geometry, x_star, p_star)?;
        families::build_discretized_state(&geometry.0, &t, &density.0, alpha).map(PyState).map_err(py_err)
    }

    /// Wall-adapted state built from a theta state (or a discretized one if
    /// `density` is given) on the doubled interval.
    #[staticmethod]
    #[pyo3(signature = (geometry, alpha, density = None, x_star = 0.0, p_star = 0.0))]
    fn well_adapted(geometry: &PyGeometry, alpha: f64, density: Option<&PyDensity>, x_star: f64, p_star: f64) -> PyResult<Self> {
        let t = target(geometry, x_star, p_star)?;
        let inner = match density {
            Some(d) => InnerFamily::Discretized { density: d.0.clone(), alpha },
            None => InnerFamily::Theta { alpha },
        };
        families::build_well_adapted(&geometry.0, &t, &inner).map(PyState).map_err(py_err)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.0.family.name()
    }

    #[getter]
    fn geometry(&self) -> PyGeometry {
        PyGeometry(self.0.geometry)
    }

    fn psi(&self, x: f64) -> PyResult<Complex64> {
        let l = self.0.geometry.l;
        if x.abs() > l {
            return Err(py_err(Error::OutOfDomain { x, l }));
        }
        Ok(self.0.psi(x))
    }

    /// `[(k, a_k), ...]` over the stored window.
    fn coefficients(&self) -> Vec<(i64, Complex64)> {
        self.0.series.iter().collect()
    }

    /// Moments and uncertainty-relation checks.
    fn moments<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = moments::uncertainty_report(&self.0).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("mean_x", r.mean_x)?;
        d.set_item("mean_p", r.mean_p)?;
        d.set_item("dstar_x2", r.dstar_x2)?;
        d.set_item("dstar_p2", r.dstar_p2)?;
        d.set_item("dx2", r.dx2)?;
        d.set_item("dp2", r.dp2)?;
        d.set_item("product", r.product)?;
        d.set_item("quadrature_error", r.quadrature_error)?;
        d.set_item("series_tail_error", r.series_tail_error)?;
        d.set_item("weak_bound_ok", r.weak_bound_ok)?;
        d.set_item("conjectured_ok", r.conjectured_ok)?;
        Ok(d)
    }

    /// Energy-basis expansion over `n` sine modes about `e_star`.
    #[pyo3(signature = (n = 4096, e_star = 0.0))]
    fn energy<'py>(&self, py: Python<'py>, n: usize, e_star: f64) -> PyResult<Bound<'py, PyDict>> {
        let e = moments::energy_expand(&self.0, n).map_err(py_err)?;
        let m = moments::energy_moments(&e, e_star);
        let d = PyDict::new(py);
        d.set_item("parseval", m.parseval)?;
        d.set_item("mean_e", m.mean_e)?;
        d.set_item("dstar_e2", m.dstar_e2)?;
        d.set_item("mean_class", m.mean_class.as_str())?;
        d.set_item("class", m.class.as_str())?;
        d.set_item("ladder", m.ladder)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("State(family={}, k=[{}, {}])", self.0.family.name(), self.0.series.k_lo(), self.0.series.k_hi())
    }
}

/// `theta(x, tau) = sum_k exp(-pi tau k^2 + 2 pi i k x)`.
#[pyfunction]
fn theta(x: f64, tau: f64) -> PyResult<f64> {
    specfun::theta_eval(x, tau).map(|v| v.value).map_err(py_err)
}

/// `int_x^inf t^order exp(-gamma t^2) dt`.
#[pyfunction]
#[pyo3(signature = (x, gamma = 1.0, order = 0))]
fn gaussian_tail(x: f64, gamma: f64, order: u32) -> PyResult<f64> {
    specfun::gaussian_tail(x, gamma, order).map_err(py_err)
}

/// `(chi(x), c a_0 / |sin(x/2)|)` for a non-increasing non-negative sequence.
#[pyfunction]
#[pyo3(signature = (a, x, c = 3.0))]
fn cosine_sum_bound(a: Vec<f64>, x: f64, c: f64) -> PyResult<(f64, f64)> {
    bounds::lemd_bound(&a, x, c).map(|r| (r.chi, r.bound)).map_err(py_err)
}

/// Runs the command-line interface; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let o = cli::run(std::iter::once("sqstates".to_string()).chain(args));
    (o.code, o.stdout, o.stderr)
}

#[pymodule]
fn pysqstates(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_tail, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_sum_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
