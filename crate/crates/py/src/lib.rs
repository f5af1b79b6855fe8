//! Python bindings for `hlmt-core`.
//!
//! Data is passed as plain lists of floats; matrices as lists of columns.

use hlmt_core::{
    self as core, BootstrapConfig, HlError, Matrix, MedianConvention, PValueMode, PairedSamples, UnivariateSample,
};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: HlError) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn convention(name: &str) -> PyResult<MedianConvention> {
    name.parse().map_err(to_py)
}

fn pvalue_mode(name: &str) -> PyResult<PValueMode> {
    name.parse().map_err(to_py)
}

fn univariate(x: Vec<f64>) -> PyResult<UnivariateSample> {
    UnivariateSample::new(x).map_err(to_py)
}

fn paired(x: Vec<f64>, y: Vec<f64>) -> PyResult<PairedSamples> {
    PairedSamples::from_vecs(x, y).map_err(to_py)
}

fn matrix(columns: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_columns(columns).map_err(to_py)
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "hlmt")]
#[derive(Clone)]
struct Estimate {
    value: f64,
    pair_count: u64,
}

#[pymethods]
impl Estimate {
    fn __repr__(&self) -> String {
        format!("Estimate(value={}, pair_count={})", self.value, self.pair_count)
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "hlmt")]
#[derive(Clone)]
struct Interval {
    center: f64,
    lower: f64,
    upper: f64,
    level: f64,
}

#[pymethods]
impl Interval {
    fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    fn __repr__(&self) -> String {
        format!("Interval(center={}, lower={}, upper={}, level={})", self.center, self.lower, self.upper, self.level)
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "hlmt")]
#[derive(Clone)]
struct GlobalTest {
    estimates: Vec<f64>,
    max_stat: f64,
    critical_value: f64,
    reject: bool,
    alpha: f64,
}

#[pymethods]
impl GlobalTest {
    fn __repr__(&self) -> String {
        format!(
            "GlobalTest(max_stat={}, critical_value={}, reject={}, alpha={})",
            self.max_stat, self.critical_value, self.reject, self.alpha
        )
    }
}

/// BH decision. `rejected` holds 0-based coordinates.
#[pyclass(frozen, get_all, skip_from_py_object, module = "hlmt")]
#[derive(Clone)]
struct MultiTest {
    pvalues: Vec<f64>,
    t_bh: f64,
    rejected: Vec<usize>,
    alpha: f64,
}

#[pymethods]
impl MultiTest {
    /// FDP and TPP against the 0-based null coordinates.
    fn report(&self, nulls: Vec<usize>) -> PyResult<(f64, f64)> {
        let inner = core::MultiTestResult {
            pvalues: self.pvalues.clone(),
            t_bh: self.t_bh,
            rejected: self.rejected.clone(),
            alpha: self.alpha,
        };
        let r = core::fdp_tpp(&inner, &nulls).map_err(to_py)?;
        Ok((r.fdp, r.tpp))
    }

    fn fdp_hat(&self) -> f64 {
        core::fdp_hat(&self.pvalues, self.t_bh)
    }

    fn __repr__(&self) -> String {
        format!("MultiTest(t_bh={}, rejected={}, alpha={})", self.t_bh, self.rejected.len(), self.alpha)
    }
}

impl From<core::MultiTestResult> for MultiTest {
    fn from(r: core::MultiTestResult) -> Self {
        Self { pvalues: r.pvalues, t_bh: r.t_bh, rejected: r.rejected, alpha: r.alpha }
    }
}

impl From<core::GlobalTestResult> for GlobalTest {
    fn from(r: core::GlobalTestResult) -> Self {
        Self {
            estimates: r.estimates,
            max_stat: r.max_stat,
            critical_value: r.critical_value,
            reject: r.reject,
            alpha: r.alpha,
        }
    }
}

/// One-sample HL estimate, or the two-sample shift estimate when `y` is given.
#[pyfunction]
#[pyo3(signature = (x, y=None, convention="midpoint"))]
fn hl_estimate(x: Vec<f64>, y: Option<Vec<f64>>, convention: &str) -> PyResult<Estimate> {
    let conv = self::convention(convention)?;
    let est = match y {
        None => core::hl_one_sample(&univariate(x)?, conv),
        Some(y) => core::hl_two_sample(&paired(x, y)?, conv),
    }
    .map_err(to_py)?;
    Ok(Estimate { value: est.value, pair_count: est.pair_count })
}

/// k-th smallest (1-based) Walsh average, or pairwise difference when `y` is given.
#[pyfunction]
#[pyo3(signature = (x, k, y=None))]
fn select_kth(x: Vec<f64>, k: u64, y: Option<Vec<f64>>) -> PyResult<f64> {
    match y {
        None => core::select_walsh_kth(&univariate(x)?, k),
        Some(y) => core::select_diff_kth(&paired(x, y)?, k),
    }
    .map_err(to_py)
}

#[pyfunction]
fn u_process(x: Vec<f64>, t: f64) -> PyResult<f64> {
    core::u_process_eval(&univariate(x)?, t).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (x, alpha=0.05, replicates=300, seed=0, y=None, convention="midpoint"))]
fn confidence_interval(
    x: Vec<f64>,
    alpha: f64,
    replicates: usize,
    seed: u64,
    y: Option<Vec<f64>>,
    convention: &str,
) -> PyResult<Interval> {
    let conv = self::convention(convention)?;
    let cfg = BootstrapConfig::new(replicates, seed);
    let ci = match y {
        None => core::confidence_interval(&univariate(x)?, &cfg, alpha, conv),
        Some(y) => core::confidence_interval(&paired(x, y)?, &cfg, alpha, conv),
    }
    .map_err(to_py)?;
    Ok(Interval { center: ci.center, lower: ci.lower, upper: ci.upper, level: ci.level })
}

/// Max-type bootstrap test of H0: every coordinate has location zero
/// (or, with `y`, zero shift).
#[pyfunction]
#[pyo3(signature = (columns, alpha=0.05, replicates=300, seed=0, y=None, convention="midpoint"))]
fn global_test(
    columns: Vec<Vec<f64>>,
    alpha: f64,
    replicates: usize,
    seed: u64,
    y: Option<Vec<Vec<f64>>>,
    convention: &str,
) -> PyResult<GlobalTest> {
    let conv = self::convention(convention)?;
    let cfg = BootstrapConfig::new(replicates, seed);
    let x = matrix(columns)?;
    let res = match y {
        None => core::global_test_one_sample(&x, alpha, &cfg, conv),
        Some(y) => core::global_test_two_sample(&x, &matrix(y)?, alpha, &cfg, conv),
    }
    .map_err(to_py)?;
    Ok(res.into())
}

#[pyfunction]
#[pyo3(signature = (columns, replicates=300, seed=0, y=None, convention="midpoint", mode="smoothed"))]
fn coordinate_pvalues(
    columns: Vec<Vec<f64>>,
    replicates: usize,
    seed: u64,
    y: Option<Vec<Vec<f64>>>,
    convention: &str,
    mode: &str,
) -> PyResult<Vec<f64>> {
    let conv = self::convention(convention)?;
    let mode = pvalue_mode(mode)?;
    let cfg = BootstrapConfig::new(replicates, seed);
    let x = matrix(columns)?;
    match y {
        None => core::coordinate_pvalues_one(&x, &cfg, conv, mode),
        Some(y) => core::coordinate_pvalues_two(&x, &matrix(y)?, &cfg, conv, mode),
    }
    .map_err(to_py)
}

#[pyfunction]
fn bh_threshold(pvalues: Vec<f64>, alpha: f64) -> PyResult<MultiTest> {
    Ok(core::bh_threshold(&pvalues, alpha).map_err(to_py)?.into())
}

/// Monte-Carlo ARE of HL against the sample median under t(nu) noise;
/// `nu=None` means Gaussian.
#[pyfunction]
#[pyo3(signature = (nu=None, n=100, reps=20000, seed=0))]
fn are(nu: Option<f64>, n: usize, reps: usize, seed: u64) -> PyResult<f64> {
    let dof = nu.map_or(core::simlab::Dof::Infinite, core::simlab::Dof::Finite);
    core::simlab::are_monte_carlo(dof, n, reps, seed).map_err(to_py)
}

/// Runs a simulation described by a JSON config and returns the CSV table.
#[pyfunction]
fn simulate(config_json: &str) -> PyResult<String> {
    let cfg: core::simlab::SimulationConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let rows = core::simlab::run_experiment(&cfg).map_err(to_py)?;
    Ok(core::simlab::rows_to_csv(&rows))
}

#[pymodule]
fn hlmt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", core::VERSION)?;
    m.add_class::<Estimate>()?;
    m.add_class::<Interval>()?;
    m.add_class::<GlobalTest>()?;
    m.add_class::<MultiTest>()?;
    m.add_function(wrap_pyfunction!(hl_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(select_kth, m)?)?;
    m.add_function(wrap_pyfunction!(u_process, m)?)?;
    m.add_function(wrap_pyfunction!(confidence_interval, m)?)?;
    m.add_function(wrap_pyfunction!(global_test, m)?)?;
    m.add_function(wrap_pyfunction!(coordinate_pvalues, m)?)?;
    m.add_function(wrap_pyfunction!(bh_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(are, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
