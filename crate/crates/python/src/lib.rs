use ndarray::{Array3, Array4};
use num_complex::Complex64;
use numpy::{IntoPyArray, PyArray2, PyArray3, PyArray4, PyReadonlyArray3, PyReadonlyArray4};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use swirl::equivariance::rotate_coefficients;
use swirl::layers::{spectral_pool, spectral_unpool};
use swirl::molsph::{calibrate_spread, featurize, parse_xyz, FeaturizerConfig};
use swirl::verify::{self, VerifyOptions};
use swirl::{SpinCoefficients, SpinSignal, SphericalGrid, TransformConfig, Transformer};

fn err(e: swirl::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config(backend: &str, path: &str) -> PyResult<TransformConfig> {
    Ok(TransformConfig::new(backend.parse().map_err(err)?, path.parse().map_err(err)?))
}

fn coefficients(data: PyReadonlyArray3<'_, Complex64>, spins: Vec<i32>) -> PyResult<SpinCoefficients> {
    let data: Array3<Complex64> = data.as_array().to_owned();
    let band_limit = (data.dim().2 as f64).sqrt().round() as usize;
    SpinCoefficients::new(data, spins, band_limit).map_err(err)
}

/// Precomputed Wigner tables up to a band limit.
#[pyclass(name = "WignerTables", frozen)]
struct PyTables(swirl::WignerTables);

#[pymethods]
impl PyTables {
    #[new]
    fn new(band_limit: usize) -> PyResult<Self> {
        swirl::WignerTables::new(band_limit).map(Self).map_err(err)
    }

    #[getter]
    fn band_limit(&self) -> usize {
        self.0.band_limit()
    }

    /// Wigner d at pi/2.
    fn delta(&self, l: usize, mp: i64, m: i64) -> f64 {
        self.0.delta(l, mp, m)
    }

    fn d_matrix<'py>(&self, py: Python<'py>, l: usize, beta: f64) -> Bound<'py, PyArray2<f64>> {
        self.0.d_matrix(l, beta).into_pyarray(py)
    }
}

/// Active ZYZ rotation.
#[pyclass(name = "Rotation", frozen)]
struct PyRotation(swirl::Rotation);

#[pymethods]
impl PyRotation {
    #[new]
    fn new(alpha: f64, beta: f64, gamma: f64) -> PyResult<Self> {
        swirl::Rotation::new(alpha, beta, gamma).map(Self).map_err(err)
    }

    #[staticmethod]
    fn random(seed: u64) -> Self {
        Self(swirl::Rotation::random(&mut swirl::rng::seeded(seed)))
    }

    #[getter]
    fn angles(&self) -> (f64, f64, f64) {
        (self.0.alpha, self.0.beta, self.0.gamma)
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    fn compose(&self, other: PyRef<'_, PyRotation>) -> Self {
        Self(self.0.compose(&other.0))
    }

    fn matrix(&self) -> [[f64; 3]; 3] {
        self.0.matrix()
    }

    fn __repr__(&self) -> String {
        format!("Rotation({}, {}, {})", self.0.alpha, self.0.beta, self.0.gamma)
    }
}

/// Forward transform of samples shaped (batch, channel, n, n).
#[pyfunction]
#[pyo3(signature = (samples, spins, tables, backend = "dft", path = "full"))]
fn forward<'py>(
    py: Python<'py>,
    samples: PyReadonlyArray4<'py, Complex64>,
    spins: Vec<i32>,
    tables: PyRef<'py, PyTables>,
    backend: &str,
    path: &str,
) -> PyResult<Bound<'py, PyArray3<Complex64>>> {
    let signal = SpinSignal::new(samples.as_array().to_owned(), spins).map_err(err)?;
    let grid = SphericalGrid::new(signal.n()).map_err(err)?;
    let coeffs = Transformer::new(&grid, &tables.0, config(backend, path)?).and_then(|t| t.forward(&signal)).map_err(err)?;
    Ok(coeffs.into_data().into_pyarray(py))
}

/// Inverse transform of coefficients shaped (batch, channel, L*L), index l*l + l + m.
#[pyfunction]
#[pyo3(signature = (coeffs, spins, tables, backend = "dft", path = "full"))]
fn inverse<'py>(
    py: Python<'py>,
    coeffs: PyReadonlyArray3<'py, Complex64>,
    spins: Vec<i32>,
    tables: PyRef<'py, PyTables>,
    backend: &str,
    path: &str,
) -> PyResult<Bound<'py, PyArray4<Complex64>>> {
    let c = coefficients(coeffs, spins)?;
    let grid = SphericalGrid::for_band_limit(c.band_limit()).map_err(err)?;
    let signal = Transformer::new(&grid, &tables.0, config(backend, path)?).and_then(|t| t.inverse(&c)).map_err(err)?;
    Ok(signal.into_samples().into_pyarray(py))
}

#[pyfunction]
fn rotate<'py>(
    py: Python<'py>,
    coeffs: PyReadonlyArray3<'py, Complex64>,
    spins: Vec<i32>,
    rotation: PyRef<'py, PyRotation>,
    tables: PyRef<'py, PyTables>,
) -> PyResult<Bound<'py, PyArray3<Complex64>>> {
    let c = coefficients(coeffs, spins)?;
    Ok(rotate_coefficients(&c, &rotation.0, &tables.0).map_err(err)?.into_data().into_pyarray(py))
}

#[pyfunction]
fn pool<'py>(py: Python<'py>, coeffs: PyReadonlyArray3<'py, Complex64>, spins: Vec<i32>, band_limit: usize) -> PyResult<Bound<'py, PyArray3<Complex64>>> {
    let c = coefficients(coeffs, spins)?;
    Ok(spectral_pool(&c, band_limit).map_err(err)?.into_data().into_pyarray(py))
}

#[pyfunction]
fn unpool<'py>(py: Python<'py>, coeffs: PyReadonlyArray3<'py, Complex64>, spins: Vec<i32>, band_limit: usize) -> PyResult<Bound<'py, PyArray3<Complex64>>> {
    let c = coefficients(coeffs, spins)?;
    Ok(spectral_unpool(&c, band_limit).map_err(err)?.into_data().into_pyarray(py))
}

/// Per-atom feature spheres for one XYZ block: (features, vocabulary).
#[pyfunction]
#[pyo3(signature = (xyz, n = 32, powers = None))]
fn featurize_xyz<'py>(py: Python<'py>, xyz: &str, n: usize, powers: Option<Vec<f64>>) -> PyResult<(Bound<'py, PyArray4<f64>>, Vec<u32>)> {
    let mol = parse_xyz(xyz).map_err(err)?;
    let mut cfg = FeaturizerConfig::for_molecule(&mol);
    if let Some(p) = powers {
        cfg.powers = p;
    }
    let grid = SphericalGrid::new(n).map_err(err)?;
    let features = featurize(&mol, &cfg, &grid).map_err(err)?;
    let real: Array4<f64> = features.signal.samples().mapv(|v| v.re);
    Ok((real.into_pyarray(py), features.vocabulary))
}

#[pyfunction(name = "calibrate_spread")]
fn py_calibrate_spread(reduction: f64, angle: f64) -> PyResult<f64> {
    calibrate_spread(reduction, angle).map_err(err)
}

/// Runs the invariant suite; one dict per check.
#[pyfunction(name = "verify")]
#[pyo3(signature = (filter = None, seed = 0))]
fn py_verify<'py>(py: Python<'py>, filter: Option<String>, seed: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let rows = verify::run(&VerifyOptions { filter, seed, ..Default::default() }).map_err(err)?;
    rows.into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("name", r.name)?;
            d.set_item("L", r.band_limit)?;
            d.set_item("metric", r.metric)?;
            d.set_item("threshold", r.threshold)?;
            d.set_item("pass", r.pass)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn pyswirl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTables>()?;
    m.add_class::<PyRotation>()?;
    m.add_function(wrap_pyfunction!(forward, m)?)?;
    m.add_function(wrap_pyfunction!(inverse, m)?)?;
    m.add_function(wrap_pyfunction!(rotate, m)?)?;
    m.add_function(wrap_pyfunction!(pool, m)?)?;
    m.add_function(wrap_pyfunction!(unpool, m)?)?;
    m.add_function(wrap_pyfunction!(featurize_xyz, m)?)?;
    m.add_function(wrap_pyfunction!(py_calibrate_spread, m)?)?;
    m.add_function(wrap_pyfunction!(py_verify, m)?)?;
    Ok(())
}
