//! Python bindings for the cat map workbench.
//!
//! Lattice sizes are plain integers, directions are `"forward"` /
//! `"backward"`, and rational points are `"px,py,q"` strings so that
//! arbitrary-precision coordinates survive the trip unchanged.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use catlab_core::classical::{self, FitWindow};
use catlab_core::experiments::{self, ExperimentConfig, ExperimentReport, Scenario};
use catlab_core::maps::{self, Direction, LatticePoint, LatticeSize, RationalPoint};
use catlab_core::quantum::{self, NoiseModel};
use catlab_core::rng::{stream, Purpose};
use catlab_core::spectral;

create_exception!(catlab, CatlabError, PyException);

fn err(e: catlab_core::Error) -> PyErr {
    CatlabError::new_err(e.to_string())
}

fn size(n: u64) -> PyResult<LatticeSize> {
    LatticeSize::new(n).map_err(err)
}

fn direction(s: &str) -> PyResult<Direction> {
    s.parse().map_err(err)
}

/// An integer matrix with determinant 1 and |trace| > 2.
#[pyclass(name = "CatMatrix", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyCatMatrix(maps::CatMatrix);

#[pymethods]
impl PyCatMatrix {
    #[new]
    #[pyo3(signature = (a=1, b=1, c=1, d=2))]
    fn new(a: i64, b: i64, c: i64, d: i64) -> PyResult<Self> {
        maps::CatMatrix::new(a, b, c, d).map(Self).map_err(err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse().map(Self).map_err(err)
    }

    fn entries(&self) -> [i64; 4] {
        self.0.entries()
    }

    fn trace(&self) -> i128 {
        self.0.trace()
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    fn lyapunov_exponent(&self) -> f64 {
        maps::lyapunov_exponent(&self.0)
    }

    /// Smallest `t >= 1` with `M^t = I (mod n)`.
    #[pyo3(signature = (n, method="group", cap=maps::DEFAULT_PERIOD_CAP))]
    fn period(&self, n: u64, method: &str, cap: u64) -> PyResult<u64> {
        match method {
            "group" => maps::map_period(&self.0, size(n)?).map_err(err),
            "iterate" => maps::map_period_by_iteration(&self.0, size(n)?.get(), cap).map_err(err),
            other => Err(CatlabError::new_err(format!(
                "unknown period method {other:?}"
            ))),
        }
    }

    /// Maps lattice point `(x, y)` on the `n x n` grid `t` times.
    #[pyo3(signature = (x, y, n, t=1, direction="forward"))]
    fn step(&self, x: u64, y: u64, n: u64, t: u64, direction: &str) -> PyResult<(u64, u64)> {
        let p = LatticePoint::new(x, y, size(n)?).map_err(err)?;
        let m = self.0.oriented(self::direction(direction)?);
        Ok(maps::matrix_pow_mod(&m, t, p.size.get()).apply(p.x, p.y))
    }

    /// Exact step of a rational point given as `"px,py,q"`.
    fn step_rational(&self, point: &str) -> PyResult<String> {
        let p: RationalPoint = point.parse().map_err(err)?;
        let next = p.step(&self.0);
        Ok(format!("{},{},{}", next.px, next.py, next.q))
    }

    fn __repr__(&self) -> String {
        let [a, b, c, d] = self.0.entries();
        format!("CatMatrix({a}, {b}, {c}, {d})")
    }
}

/// A normalized probability density on the `N x N` lattice.
#[pyclass(name = "Density", frozen, from_py_object)]
#[derive(Clone)]
struct PyDensity(classical::Density);

#[pymethods]
impl PyDensity {
    /// Builds a density from `N*N` values in row-major `x * N + y` order.
    #[new]
    fn new(n: u64, cells: Vec<f64>) -> PyResult<Self> {
        classical::Density::new(size(n)?, cells)
            .map(Self)
            .map_err(err)
    }

    /// `"uniform"`, `"delta:x,y"` or `"gaussian:cx,cy,sigma"`.
    #[staticmethod]
    fn generate(spec: &str, n: u64) -> PyResult<Self> {
        classical::Density::generate(spec, size(n)?)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn random(n: u64, seed: u64) -> PyResult<Self> {
        let mut rng = stream(seed, Purpose::RandomDensity, &[]);
        classical::Density::random(size(n)?, &mut rng)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.size().get()
    }

    fn cells(&self) -> Vec<f64> {
        self.0.cells().to_vec()
    }

    fn total(&self) -> f64 {
        self.0.total()
    }

    #[pyo3(signature = (matrix, t=1, direction="forward"))]
    fn evolve(&self, matrix: &PyCatMatrix, t: u64, direction: &str) -> PyResult<Self> {
        Ok(Self(classical::evolve_density(
            &self.0,
            &matrix.0,
            t,
            self::direction(direction)?,
        )))
    }

    fn __repr__(&self) -> String {
        format!("Density(n={})", self.0.size())
    }
}

/// Normalized power over wave vectors, flat index `k_x * N + k_y`.
#[pyclass(name = "Spectrum", frozen, from_py_object)]
#[derive(Clone)]
struct PySpectrum(spectral::Spectrum);

#[pymethods]
impl PySpectrum {
    #[getter]
    fn n(&self) -> u64 {
        self.0.size().get()
    }

    fn power(&self) -> Vec<f64> {
        self.0.power().to_vec()
    }

    fn get(&self, kx: u64, ky: u64) -> PyResult<f64> {
        let n = self.0.size().get();
        if kx >= n || ky >= n {
            return Err(CatlabError::new_err(format!(
                "wave vector ({kx},{ky}) outside {n}x{n}"
            )));
        }
        Ok(self.0.get(kx, ky))
    }
}

/// Amplitudes of `2n` qubits encoding an `N x N` lattice; `x` in the high register.
#[pyclass(name = "StateVector", frozen, from_py_object)]
#[derive(Clone)]
struct PyStateVector(quantum::StateVector);

#[pymethods]
impl PyStateVector {
    #[new]
    fn new(n: u64, amplitudes: Vec<Complex64>) -> PyResult<Self> {
        quantum::StateVector::from_amplitudes(size(n)?, amplitudes)
            .map(Self)
            .map_err(err)
    }

    /// Amplitude encoding `sqrt(rho)` of a classical density.
    #[staticmethod]
    fn from_density(density: &PyDensity) -> PyResult<Self> {
        quantum::prepare_state(&density.0).map(Self).map_err(err)
    }

    #[staticmethod]
    fn basis(n: u64, x: u64, y: u64) -> PyResult<Self> {
        quantum::StateVector::basis(size(n)?, x, y)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.size().get()
    }

    #[getter]
    fn num_qubits(&self) -> u32 {
        self.0.num_qubits()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.0.probabilities()
    }

    #[pyo3(signature = (matrix, t=1, direction="forward"))]
    fn evolve(&self, matrix: &PyCatMatrix, t: u64, direction: &str) -> PyResult<Self> {
        Ok(Self(quantum::apply_map_steps(
            &self.0,
            &matrix.0,
            t,
            self::direction(direction)?,
        )))
    }

    #[pyo3(signature = (direction="forward"))]
    fn qft(&self, direction: &str) -> PyResult<Self> {
        Ok(Self(quantum::qft2d(&self.0, self::direction(direction)?)))
    }

    fn fidelity(&self, other: &PyStateVector) -> PyResult<f64> {
        quantum::fidelity(&self.0, &other.0).map_err(err)
    }

    /// Outcome counts from `samples` computational-basis measurements.
    fn measure(&self, samples: u64, seed: u64) -> PyResult<Vec<u64>> {
        let mut rng = stream(seed, Purpose::Measurement, &[]);
        quantum::measure_samples(&self.0, samples, &mut rng)
            .map(|h| h.counts)
            .map_err(err)
    }

    /// Power spectrum of the amplitudes, computed classically.
    fn power_spectrum(&self) -> PyResult<PySpectrum> {
        spectral::power_spectrum(self.0.amplitudes(), self.0.size())
            .map(PySpectrum)
            .map_err(err)
    }

    /// Spectrum estimated from `samples` measurements after a forward QFT.
    fn sampled_spectrum(&self, samples: u64, seed: u64) -> PyResult<PySpectrum> {
        let transformed = quantum::qft2d(&self.0, Direction::Forward);
        let mut rng = stream(seed, Purpose::Measurement, &[]);
        let hist = quantum::measure_samples(&transformed, samples, &mut rng).map_err(err)?;
        Ok(PySpectrum(spectral::estimate_spectrum(&hist)))
    }
}

#[pyfunction]
fn tv_distance(p: &PySpectrum, q: &PySpectrum) -> PyResult<f64> {
    spectral::tv_distance(&p.0, &q.0).map_err(err)
}

/// Exact distance between a rational trajectory and its `bits`-bit fixed-point shadow.
#[pyfunction]
#[pyo3(signature = (matrix, point, bits, steps))]
fn divergence(
    matrix: &PyCatMatrix,
    point: &str,
    bits: u32,
    steps: usize,
) -> PyResult<(Vec<f64>, bool)> {
    let p: RationalPoint = point.parse().map_err(err)?;
    let series = classical::divergence_series(&matrix.0, &p, bits, steps).map_err(err)?;
    Ok((series.distances().to_vec(), series.is_degenerate()))
}

/// Mean first-passage time of the divergence to `threshold` over random starts.
#[pyfunction]
#[pyo3(signature = (matrix, bits, trials, seed, threshold=0.25))]
fn breakdown_time(
    matrix: &PyCatMatrix,
    bits: u32,
    trials: usize,
    seed: u64,
    threshold: f64,
) -> PyResult<f64> {
    classical::breakdown_time(&matrix.0, bits, threshold, trials, seed)
        .map(|s| s.mean)
        .map_err(err)
}

/// Ensemble-mean Lyapunov exponent fitted from pre-saturation divergence.
#[pyfunction]
fn fit_lyapunov(matrix: &PyCatMatrix, bits: u32, trials: usize, seed: u64) -> PyResult<f64> {
    classical::fit_lyapunov_ensemble(&matrix.0, bits, trials, seed, FitWindow::default())
        .map(|e| e.mean)
        .map_err(err)
}

/// Mean fidelity, its standard error and the error-free fraction per step.
#[pyfunction]
#[pyo3(signature = (state, matrix, steps, noise, trajectories, seed, gates_per_step=1))]
fn simulate_noisy(
    state: &PyStateVector,
    matrix: &PyCatMatrix,
    steps: usize,
    noise: &str,
    trajectories: usize,
    seed: u64,
    gates_per_step: usize,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let model = NoiseModel::parse(noise, trajectories).map_err(err)?;
    let run = quantum::simulate_noisy(&state.0, &matrix.0, steps, &model, gates_per_step, seed)
        .map_err(err)?;
    Ok((
        run.mean_fidelity,
        run.fidelity_stderr,
        run.error_free_fraction,
    ))
}

/// Default configuration for a scenario, as JSON.
#[pyfunction]
fn default_config(scenario: &str, seed: u64) -> PyResult<String> {
    let scenario: Scenario = scenario.parse().map_err(err)?;
    serde_json::to_string_pretty(&ExperimentConfig::new(scenario, seed))
        .map_err(|e| CatlabError::new_err(e.to_string()))
}

/// Runs an experiment from a JSON config (or a previous report) and returns the report JSON.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let cfg = match serde_json::from_str::<ExperimentConfig>(config_json) {
        Ok(cfg) => cfg,
        Err(_) => {
            ExperimentReport::from_json(config_json)
                .map_err(err)?
                .provenance
                .config
        }
    };
    experiments::run(&cfg).map(|r| r.to_json()).map_err(err)
}

#[pymodule]
fn catlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CatlabError", m.py().get_type::<CatlabError>())?;
    m.add_class::<PyCatMatrix>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyStateVector>()?;
    m.add_function(wrap_pyfunction!(tv_distance, m)?)?;
    m.add_function(wrap_pyfunction!(divergence, m)?)?;
    m.add_function(wrap_pyfunction!(breakdown_time, m)?)?;
    m.add_function(wrap_pyfunction!(fit_lyapunov, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_noisy, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
