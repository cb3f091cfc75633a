//! Python bindings for the memristive synapse simulator.
//!
//! Every function takes an optional `Config`; without one the built-in
//! defaults are used. Quantities are in SI base units.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use memsyn::circuit::{branch_current_exact, branch_current_linear, read_synapse};
use memsyn::device::{DeviceParams, SynapsePair};
use memsyn::learning::UpdateMode;
use memsyn::neuron::{step_neuron as step, NeuronState};
use memsyn::rng::{stream, Stream};
use memsyn::tasks::{mnist, single_pattern};
use memsyn::variability::run_study;
use memsyn::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Solver { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Resolved experiment configuration.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: memsyn::io::Config,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        PyConfig {
            inner: memsyn::io::Config::default(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        memsyn::io::Config::from_toml(text)
            .map(|inner| PyConfig { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        memsyn::io::Config::load(&path)
            .map(|inner| PyConfig { inner })
            .map_err(to_py)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Config(seed={})", self.inner.seed)
    }
}

fn resolve(config: Option<&PyConfig>) -> memsyn::io::Config {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

/// Branch current through a device of resistance `r`.
#[pyfunction]
#[pyo3(signature = (r, v_s=None, exact=true, config=None))]
fn branch_current(r: f64, v_s: Option<f64>, exact: bool, config: Option<&PyConfig>) -> PyResult<f64> {
    let mut p = resolve(config).circuit;
    if let Some(v) = v_s {
        p.v_s = v;
    }
    p.validate().map_err(to_py)?;
    if exact {
        branch_current_exact(r, &p).map_err(to_py)
    } else if r > 0.0 {
        Ok(branch_current_linear(r, &p))
    } else {
        Err(PyValueError::new_err(format!("resistance must be positive, got {r}")))
    }
}

/// Normalizer outputs `(i_pos, i_neg)` for a device pair.
#[pyfunction]
#[pyo3(signature = (r_pos, r_neg, config=None))]
fn read_pair(r_pos: f64, r_neg: f64, config: Option<&PyConfig>) -> PyResult<(f64, f64)> {
    if !(r_pos > 0.0 && r_neg > 0.0) {
        return Err(PyValueError::new_err("resistances must be positive"));
    }
    let out = read_synapse(&SynapsePair::new(r_pos, r_neg), &resolve(config).circuit).map_err(to_py)?;
    Ok((out.i_pos, out.i_neg))
}

fn devices(preset: Option<&str>, cfg: &memsyn::io::Config) -> PyResult<DeviceParams> {
    match preset {
        None => Ok(cfg.device),
        Some("conservative") => Ok(DeviceParams::conservative()),
        Some("typical") => Ok(DeviceParams::typical()),
        Some(other) => Err(PyValueError::new_err(format!(
            "unknown preset `{other}` (expected `conservative` or `typical`)"
        ))),
    }
}

/// `n` resistances drawn from the high or low state.
#[pyfunction]
#[pyo3(signature = (state, n, seed=None, preset=None, config=None))]
fn sample_device(
    state: &str,
    n: usize,
    seed: Option<u64>,
    preset: Option<&str>,
    config: Option<&PyConfig>,
) -> PyResult<Vec<f64>> {
    let cfg = resolve(config);
    let d = devices(preset, &cfg)?;
    d.validate().map_err(to_py)?;
    let dist = match state {
        "high" => d.high_state,
        "low" => d.low_state,
        other => return Err(PyValueError::new_err(format!("state must be `high` or `low`, got `{other}`"))),
    };
    let mut rng = stream(seed.unwrap_or(cfg.seed), Stream::Devices, 0);
    Ok((0..n).map(|_| dist.sample(&mut rng).resistance).collect())
}

/// Monte Carlo variability study. Returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (n=10_000, seed=None, preset=None, config=None))]
fn variability_study<'py>(
    py: Python<'py>,
    n: usize,
    seed: Option<u64>,
    preset: Option<&str>,
    config: Option<&PyConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = resolve(config);
    let d = devices(preset, &cfg)?;
    let seed = seed.unwrap_or(cfg.seed);
    let rep = py
        .detach(|| run_study(&d, &cfg.circuit, n, seed))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("cv_resistance_diff", rep.cv_resistance_diff)?;
    out.set_item("cv_current_diff", rep.cv_current_diff)?;
    out.set_item("mean_resistance_diff", rep.mean_resistance_diff)?;
    out.set_item("std_resistance_diff", rep.std_resistance_diff)?;
    out.set_item("mean_current_diff", rep.mean_current_diff)?;
    out.set_item("std_current_diff", rep.std_current_diff)?;
    out.set_item("n_samples", rep.n_samples)?;
    Ok(out)
}

/// One forward-Euler neuron step. Returns `(i_m, i_adapt, spiked)`.
#[pyfunction]
#[pyo3(signature = (i_m, i_adapt, i_syn, i_comp=0.0, dt=None, config=None))]
fn step_neuron(
    i_m: f64,
    i_adapt: f64,
    i_syn: f64,
    i_comp: f64,
    dt: Option<f64>,
    config: Option<&PyConfig>,
) -> PyResult<(f64, f64, bool)> {
    let cfg = resolve(config);
    let dt = dt.unwrap_or(cfg.simulation.dt);
    if dt.is_nan() || dt <= 0.0 {
        return Err(PyValueError::new_err("dt must be positive"));
    }
    let (s, spiked) = step(NeuronState { i_m, i_adapt }, &cfg.neuron, 0.0, i_comp, i_syn, dt);
    Ok((s.i_m, s.i_adapt, spiked))
}

/// Trains and evaluates the two-population task for one seed.
#[pyfunction]
#[pyo3(signature = (seed=None, train=true, mode=None, config=None))]
fn run_single_pattern<'py>(
    py: Python<'py>,
    seed: Option<u64>,
    train: bool,
    mode: Option<&str>,
    config: Option<&PyConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = resolve(config);
    let mut model = cfg.single_pattern_model();
    match mode {
        None => {}
        Some("binary") => model.learning.mode = UpdateMode::Binary,
        Some("high_res") => model.learning.mode = UpdateMode::HighRes,
        Some(other) => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    }
    let task = cfg.single_pattern.task;
    let seed = seed.unwrap_or(cfg.seed);
    let o = py
        .detach(|| single_pattern::run_single_pattern(&task, &model, seed, train))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("seed", o.seed)?;
    out.set_item("error_rate", o.report.error_rate)?;
    out.set_item("strong_contrast_accuracy", o.accuracy(task.strong_contrast))?;
    let grid: Vec<(f64, f64, f64, f64)> = o.grid.iter().map(|g| (g.x1, g.x2, g.rate_a, g.rate_b)).collect();
    out.set_item("grid", grid)?;
    Ok(out)
}

/// Reduced-MNIST run for one seed on the IDX files in `mnist_dir`.
#[pyfunction]
#[pyo3(signature = (mnist_dir, seed=None, config=None))]
fn run_mnist<'py>(
    py: Python<'py>,
    mnist_dir: PathBuf,
    seed: Option<u64>,
    config: Option<&PyConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = resolve(config);
    let task = cfg.mnist.task;
    let model = cfg.mnist_model();
    let seed = seed.unwrap_or(cfg.seed);
    let o = py
        .detach(|| {
            let [img, lab, timg, tlab] = mnist::default_paths(&mnist_dir);
            let max_label = (task.n_classes - 1) as u8;
            let train = mnist::load_mnist(&img, &lab)?.filter_classes(max_label);
            let test = mnist::load_mnist(&timg, &tlab)?.filter_classes(max_label);
            mnist::run_mnist(&task, &model, &train, &test, seed)
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("seed", o.report.seed)?;
    out.set_item("error_rate", o.report.error_rate)?;
    let predicted: Vec<Option<usize>> = o.report.patterns.iter().map(|p| p.predicted).collect();
    let labels: Vec<usize> = o.report.patterns.iter().map(|p| p.true_label).collect();
    out.set_item("labels", labels)?;
    out.set_item("predicted", predicted)?;
    out.set_item("weight_images", o.weight_images)?;
    Ok(out)
}

/// Runs the command-line front end with `args` (without the program name).
#[pyfunction]
fn cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("memsyn".to_owned()).chain(args).collect();
    py.detach(|| memsyn::io::cli::dispatch(argv))
}

#[pymodule]
fn pymemsyn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(branch_current, m)?)?;
    m.add_function(wrap_pyfunction!(read_pair, m)?)?;
    m.add_function(wrap_pyfunction!(sample_device, m)?)?;
    m.add_function(wrap_pyfunction!(variability_study, m)?)?;
    m.add_function(wrap_pyfunction!(step_neuron, m)?)?;
    m.add_function(wrap_pyfunction!(run_single_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(run_mnist, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
