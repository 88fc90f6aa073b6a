//! Python bindings. Matrices cross the boundary as lists of rows.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use glspec::bandwidth::{self, OmegaGrid, OutlierWindow, SelectionTarget};
use glspec::data_gen;
use glspec::experiments::{self, Experiment, ExperimentConfig};
use glspec::kernels::{self, KernelParams};
use glspec::mp_law;
use glspec::spectrum;
use glspec::Matrix;

fn err(e: glspec::Error) -> PyErr {
    match e {
        glspec::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    Ok(Matrix::from_fn(n, p, |i, j| rows[i][j]))
}

#[pyclass(name = "PointCloud", module = "glspec_py")]
struct PyPointCloud {
    inner: data_gen::PointCloud,
}

#[pymethods]
impl PyPointCloud {
    #[staticmethod]
    #[pyo3(signature = (n, p, lambdas, seed, rotate = false))]
    fn spiked(n: usize, p: usize, lambdas: Vec<f64>, seed: u64, rotate: bool) -> PyResult<Self> {
        let mut cfg = data_gen::GeneratorConfig::spiked(n, p, lambdas, seed);
        cfg.rotate = rotate;
        Ok(PyPointCloud { inner: data_gen::gen_spiked(&cfg).map_err(err)? })
    }

    #[staticmethod]
    fn circle(n: usize, p: usize, lambda: f64, seed: u64) -> PyResult<Self> {
        Ok(PyPointCloud { inner: data_gen::gen_circle(n, p, lambda, seed).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, p, a, seed, rotate = false))]
    fn curve_m1(n: usize, p: usize, a: f64, seed: u64, rotate: bool) -> PyResult<Self> {
        Ok(PyPointCloud { inner: data_gen::gen_curve_m1(n, p, a, rotate, seed).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, p, a, seed, rotate = false))]
    fn klein_bottle(n: usize, p: usize, a: f64, seed: u64, rotate: bool) -> PyResult<Self> {
        Ok(PyPointCloud { inner: data_gen::gen_klein_bottle(n, p, a, rotate, seed).map_err(err)? })
    }

    /// Reads the binary format for `.bin` paths and CSV otherwise.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let inner = if path.extension().is_some_and(|e| e == "bin") {
            data_gen::read_cloud_binary(&path)
        } else {
            data_gen::read_cloud_csv(&path)
        };
        Ok(PyPointCloud { inner: inner.map_err(err)? })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        if path.extension().is_some_and(|e| e == "bin") {
            data_gen::write_cloud_binary(&path, &self.inner)
        } else {
            data_gen::write_cloud_csv(&path, &self.inner)
        }
        .map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas.clone()
    }

    fn signal_strength(&self) -> f64 {
        self.inner.signal_strength()
    }

    fn clean(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.clean)
    }

    fn noise(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.noise)
    }

    fn noisy(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.noisy())
    }

    fn __repr__(&self) -> String {
        format!("PointCloud(kind={}, n={}, p={}, d={})", self.inner.kind.name(), self.inner.n, self.inner.p, self.inner.d)
    }
}

#[pyclass(name = "MpMeasure", module = "glspec_py")]
struct PyMpMeasure {
    inner: mp_law::MpMeasure,
}

#[pymethods]
impl PyMpMeasure {
    #[new]
    #[pyo3(signature = (c, sigma2 = 1.0, shift = 0.0))]
    fn new(c: f64, sigma2: f64, shift: f64) -> PyResult<Self> {
        Ok(PyMpMeasure { inner: mp_law::MpMeasure::new(c, sigma2).map_err(err)?.shifted(shift) })
    }

    /// The null bulk law of W for aspect ratio c, dimension p and υ.
    #[staticmethod]
    fn nu_lambda(c: f64, p: usize, lambda: f64, upsilon: f64) -> PyResult<Self> {
        Ok(PyMpMeasure { inner: mp_law::nu_lambda(c, p, lambda, upsilon).map_err(err)? })
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2
    }

    #[getter]
    fn shift(&self) -> f64 {
        self.inner.shift
    }

    #[getter]
    fn point_mass(&self) -> f64 {
        self.inner.point_mass_at_zero
    }

    fn edges(&self) -> (f64, f64) {
        self.inner.edges()
    }

    fn density(&self, x: f64) -> f64 {
        self.inner.density(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn typical_location(&self, j: usize, n: usize) -> PyResult<f64> {
        self.inner.typical_location(j, n).map_err(err)
    }

    fn typical_locations(&self, n: usize) -> PyResult<Vec<f64>> {
        self.inner.typical_locations(n).map_err(err)
    }

    /// `(x, density, cdf)` rows.
    fn table(&self, points: usize) -> Vec<(f64, f64, f64)> {
        self.inner.table(points)
    }
}

#[pyfunction]
fn affinity(points: Vec<Vec<f64>>, upsilon: f64, h: f64) -> PyResult<Vec<Vec<f64>>> {
    let x = from_rows(points)?;
    let w = kernels::affinity(&kernels::pairwise_sq_dists(&x), KernelParams::new(upsilon, h).map_err(err)?)
        .map_err(err)?;
    Ok(to_rows(&w))
}

#[pyfunction]
fn transition(w: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&kernels::transition(&from_rows(w)?).map_err(err)?))
}

#[pyfunction]
fn zeroed_transition(w: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&kernels::zeroed_transition(&from_rows(w)?).map_err(err)?))
}

#[pyfunction]
fn laplacian(w: Vec<Vec<f64>>, h: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&kernels::laplacian(&from_rows(w)?, h).map_err(err)?))
}

/// Descending eigenvalues of the symmetric part of `m`.
#[pyfunction]
fn eigenvalues(m: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    spectrum::eigenvalues(&from_rows(m)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (points, omega = 0.5))]
fn quantile_bandwidth(points: Vec<Vec<f64>>, omega: f64) -> PyResult<f64> {
    bandwidth::quantile_bandwidth(&kernels::pairwise_sq_dists(&from_rows(points)?), omega).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (c, n, upsilon = 0.5, reps = 200, level = 0.95, seed = 1))]
fn resample_threshold(c: f64, n: usize, upsilon: f64, reps: usize, level: f64, seed: u64) -> PyResult<f64> {
    bandwidth::resample_threshold(c, n, upsilon, reps, level, seed).map_err(err)
}

/// Adaptive bandwidth selection; returns the selection as a JSON string.
#[pyfunction]
#[pyo3(signature = (cloud, s, upsilon = 0.5, omega_l = 0.05, omega_u = 0.95, t = 91, target = "W"))]
fn select_omega(
    cloud: &PyPointCloud,
    s: f64,
    upsilon: f64,
    omega_l: f64,
    omega_u: f64,
    t: usize,
    target: &str,
) -> PyResult<String> {
    let target = match target {
        "W" | "w" => SelectionTarget::Affinity,
        "A" | "a" => SelectionTarget::Transition,
        _ => return Err(PyValueError::new_err("target must be 'W' or 'A'")),
    };
    let c = &cloud.inner;
    let sel = bandwidth::select_omega_with(
        &c.noisy(),
        upsilon,
        OmegaGrid { omega_l, omega_u, t },
        s,
        OutlierWindow::top_half(c.n, c.p),
        target,
    )
    .map_err(err)?;
    sel.to_json().map_err(err)
}

/// Run a named experiment; `config` is the key-value text. Returns the
/// manifest as a JSON string.
#[pyfunction]
#[pyo3(signature = (name, out, config = "", fast = false))]
fn run_experiment(name: &str, out: PathBuf, config: &str, fast: bool) -> PyResult<String> {
    let name: Experiment = name.parse().map_err(err)?;
    let cfg = ExperimentConfig::parse(config, Some(name), fast).map_err(err)?;
    let manifest = experiments::run(&cfg, &out).map_err(err)?;
    serde_json::to_string_pretty(&manifest).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn experiment_names() -> Vec<&'static str> {
    Experiment::ALL.iter().map(|e| e.name()).collect()
}

#[pymodule]
fn glspec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPointCloud>()?;
    m.add_class::<PyMpMeasure>()?;
    m.add_function(wrap_pyfunction!(affinity, m)?)?;
    m.add_function(wrap_pyfunction!(transition, m)?)?;
    m.add_function(wrap_pyfunction!(zeroed_transition, m)?)?;
    m.add_function(wrap_pyfunction!(laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(quantile_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(resample_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(select_omega, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_names, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
