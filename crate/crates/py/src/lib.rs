//! Python bindings: datasets, estimators, ACE estimation and simulation studies.

use frontdoor::config::{EstimatorConfig, EstimatorKind, Learner, MediatorDensity, NuisanceLearners, OutcomeKind};
use frontdoor::data::{load_csv, Dataset as CoreDataset, MediatorKind, Schema};
use frontdoor::eif::EstimateResult as CoreResult;
use frontdoor::estimate::{estimate as core_estimate, estimate_ace as core_ace};
use frontdoor::sim::study::{run_study, truth_for, SimReport as CoreReport, StudyConfig, Target};
use frontdoor::sim::{generate as core_generate, Dgp, DgpSpec};
use frontdoor::Error;
use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse_kind(s: Option<&str>) -> PyResult<Option<MediatorKind>> {
    match s {
        None => Ok(None),
        Some("binary") => Ok(Some(MediatorKind::Binary)),
        Some("continuous") => Ok(Some(MediatorKind::Continuous)),
        Some("multivariate") => Ok(Some(MediatorKind::Multivariate)),
        Some(other) => Err(PyValueError::new_err(format!(
            "mediator_kind must be binary, continuous or multivariate, got {other}"
        ))),
    }
}

fn kind_name(k: MediatorKind) -> &'static str {
    match k {
        MediatorKind::Binary => "binary",
        MediatorKind::Continuous => "continuous",
        MediatorKind::Multivariate => "multivariate",
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err(format!("{what} rows have unequal lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

/// Observed sample `(X, A, M, Y)`.
#[pyclass(frozen, module = "frontdoor_py")]
pub struct Dataset {
    inner: CoreDataset,
}

#[pymethods]
impl Dataset {
    /// `x` and `m` are row lists (`n × p`, `n × d`); `a` holds 0/1.
    #[new]
    #[pyo3(signature = (x, a, m, y, mediator_kind=None))]
    fn new(x: Vec<Vec<f64>>, a: Vec<u8>, m: Vec<Vec<f64>>, y: Vec<f64>, mediator_kind: Option<&str>) -> PyResult<Self> {
        let kind = parse_kind(mediator_kind)?;
        let inner = CoreDataset::new(matrix(&x, "x")?, a, matrix(&m, "m")?, y, kind).map_err(to_py)?;
        Ok(Dataset { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, y, a, m, x, mediator_kind=None))]
    fn from_csv(path: &str, y: &str, a: &str, m: Vec<String>, x: Vec<String>, mediator_kind: Option<&str>) -> PyResult<Self> {
        let schema = Schema {
            outcome: y.into(),
            treatment: a.into(),
            covariates: x,
            mediators: m,
            mediator_kind: parse_kind(mediator_kind)?,
        };
        Ok(Dataset { inner: load_csv(path, &schema).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn mediator_kind(&self) -> &'static str {
        kind_name(self.inner.mediator_kind())
    }

    #[getter]
    fn a(&self) -> Vec<u8> {
        self.inner.a().to_vec()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y().to_vec()
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n()).map(|i| self.inner.x_row(i)).collect()
    }

    #[getter]
    fn m(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n()).map(|i| self.inner.m_row(i)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n={}, covariates={}, mediators={}, mediator_kind='{}')",
            self.inner.n(),
            self.inner.n_covariates(),
            self.inner.n_mediators(),
            self.mediator_kind()
        )
    }
}

/// Point estimate, Wald interval and targeting diagnostics.
#[pyclass(frozen, module = "frontdoor_py")]
pub struct EstimateResult {
    inner: CoreResult,
}

#[pymethods]
impl EstimateResult {
    #[getter]
    fn psi(&self) -> f64 {
        self.inner.psi
    }

    #[getter]
    fn se(&self) -> f64 {
        self.inner.se
    }

    #[getter]
    fn ci(&self) -> (f64, f64) {
        self.inner.ci
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    #[getter]
    fn score_residuals<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = &self.inner.score_residuals;
        let d = PyDict::new(py);
        for (k, v) in [("y", s.y), ("m", s.m), ("a", s.a), ("x", s.x), ("total", s.total)] {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    /// `(iteration, component, epsilon)` per targeting step.
    #[getter]
    fn epsilon_history(&self) -> Vec<(usize, String, f64)> {
        self.inner.epsilon_history.iter().map(|e| (e.iteration, e.component.clone(), e.value)).collect()
    }

    /// Per-row efficient influence function values, when retained.
    #[getter]
    fn eif(&self) -> Option<Vec<f64>> {
        self.inner.eif.as_ref().map(|e| e.total.clone())
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "EstimateResult(psi={:.6}, se={:.6}, ci=({:.6}, {:.6}), iterations={}, converged={})",
            self.inner.psi, self.inner.se, self.inner.ci.0, self.inner.ci.1, self.inner.iterations, self.inner.converged
        )
    }
}

/// Monte Carlo study output.
#[pyclass(frozen, module = "frontdoor_py")]
pub struct SimReport {
    inner: CoreReport,
}

#[pymethods]
impl SimReport {
    #[getter]
    fn truth(&self) -> f64 {
        self.inner.truth
    }

    #[getter]
    fn replicates(&self) -> usize {
        self.inner.replicates
    }

    /// One dict per estimator with bias, sd, mse, coverage, width and failures.
    #[getter]
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("estimator", r.estimator.name())?;
                d.set_item("n", r.n)?;
                d.set_item("bias", r.bias)?;
                d.set_item("sd", r.sd)?;
                d.set_item("mse", r.mse)?;
                d.set_item("coverage", r.coverage)?;
                d.set_item("width", r.width)?;
                d.set_item("failed", r.failed)?;
                d.set_item("mean_se", r.mean_se)?;
                Ok(d)
            })
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    fn to_csv(&self) -> PyResult<String> {
        self.inner.to_csv().map_err(to_py)
    }

    fn to_markdown(&self) -> String {
        self.inner.to_markdown()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(SimReport { inner: CoreReport::from_json(text).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        self.inner.to_text()
    }
}

fn learners(learner: &str, density: &str) -> PyResult<NuisanceLearners> {
    let l: Learner = learner.parse().map_err(to_py)?;
    let density = match density {
        "kernel" => MediatorDensity::Kernel,
        "normal" => MediatorDensity::Normal,
        other => return Err(PyValueError::new_err(format!("mediator_density must be kernel or normal, got {other}"))),
    };
    Ok(NuisanceLearners::uniform(l).with_density(density))
}

#[allow(clippy::too_many_arguments)]
fn config(
    estimator: &str,
    a0: u8,
    learner: &str,
    mediator_density: &str,
    binary_outcome: bool,
    folds: usize,
    seed: u64,
    max_iter: usize,
) -> PyResult<EstimatorConfig> {
    let kind: EstimatorKind = estimator.parse().map_err(to_py)?;
    let mut cfg = EstimatorConfig::new(kind, a0);
    cfg.learners = learners(learner, mediator_density)?;
    cfg.outcome_kind = if binary_outcome { OutcomeKind::Binary } else { OutcomeKind::Continuous };
    cfg.crossfit_folds = folds;
    cfg.seed = seed;
    cfg.max_tmle_iter = max_iter;
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Estimates `ψ(a0)`. `ratio` supplies precomputed `f(M|a0,X)/f(M|A,X)` per row.
#[pyfunction]
#[pyo3(signature = (data, estimator="tmle-1", a0=1, learner="main-terms", mediator_density="kernel",
                    binary_outcome=false, folds=1, seed=0, max_iter=500, ratio=None))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    py: Python<'_>,
    data: &Dataset,
    estimator: &str,
    a0: u8,
    learner: &str,
    mediator_density: &str,
    binary_outcome: bool,
    folds: usize,
    seed: u64,
    max_iter: usize,
    ratio: Option<Vec<f64>>,
) -> PyResult<EstimateResult> {
    let cfg = config(estimator, a0, learner, mediator_density, binary_outcome, folds, seed, max_iter)?;
    let d = &data.inner;
    let inner = py.detach(|| core_estimate(d, &cfg, ratio.as_deref())).map_err(to_py)?;
    Ok(EstimateResult { inner })
}

/// Estimates `ψ(1) − ψ(0)`; returns `{"ace", "psi1", "psi0"}`.
#[pyfunction]
#[pyo3(signature = (data, estimator="tmle-1", learner="main-terms", mediator_density="kernel",
                    binary_outcome=false, folds=1, seed=0, max_iter=500, ratio1=None, ratio0=None))]
#[allow(clippy::too_many_arguments)]
fn estimate_ace<'py>(
    py: Python<'py>,
    data: &Dataset,
    estimator: &str,
    learner: &str,
    mediator_density: &str,
    binary_outcome: bool,
    folds: usize,
    seed: u64,
    max_iter: usize,
    ratio1: Option<Vec<f64>>,
    ratio0: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(estimator, 1, learner, mediator_density, binary_outcome, folds, seed, max_iter)?;
    let d = &data.inner;
    let r = py.detach(|| core_ace(d, &cfg, [ratio0.as_deref(), ratio1.as_deref()])).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("ace", EstimateResult { inner: r.ace })?;
    out.set_item("psi1", EstimateResult { inner: r.psi1 })?;
    out.set_item("psi0", EstimateResult { inner: r.psi0 })?;
    Ok(out)
}

/// Draws `n` rows from a built-in data-generating process.
#[pyfunction]
#[pyo3(signature = (dgp, n, seed=0))]
fn generate(dgp: &str, n: usize, seed: u64) -> PyResult<Dataset> {
    let dgp: Dgp = dgp.parse().map_err(to_py)?;
    Ok(Dataset { inner: core_generate(&DgpSpec { dgp, n, seed }).map_err(to_py)? })
}

fn parse_target(target: &str) -> PyResult<Target> {
    match target {
        "ace" => Ok(Target::Ace),
        "0" => Ok(Target::Mean(0)),
        "1" => Ok(Target::Mean(1)),
        other => Err(PyValueError::new_err(format!("target must be 'ace', '0' or '1', got {other}"))),
    }
}

/// Monte Carlo value of the ACE (`target="ace"`) or of `ψ(a0)` (`"0"`, `"1"`).
#[pyfunction]
#[pyo3(signature = (dgp, target="ace", draws=1_000_000))]
fn truth(py: Python<'_>, dgp: &str, target: &str, draws: usize) -> PyResult<f64> {
    let dgp: Dgp = dgp.parse().map_err(to_py)?;
    let t = parse_target(target)?;
    Ok(py.detach(|| truth_for(dgp, t, draws)))
}

/// Runs `reps` replicates of every estimator on data drawn from `dgp`.
#[pyfunction]
#[pyo3(signature = (dgp, n, reps, estimators=vec!["tmle-1".to_string(), "onestep-1".to_string()],
                    learner="main-terms", mediator_density="kernel", folds=1, seed=0, target="ace",
                    truth_draws=1_000_000))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    dgp: &str,
    n: usize,
    reps: usize,
    estimators: Vec<String>,
    learner: &str,
    mediator_density: &str,
    folds: usize,
    seed: u64,
    target: &str,
    truth_draws: usize,
) -> PyResult<SimReport> {
    let dgp: Dgp = dgp.parse().map_err(to_py)?;
    let kinds = estimators
        .iter()
        .map(|s| s.parse::<EstimatorKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    let mut cfg = StudyConfig::new(dgp, n, reps, kinds, seed);
    cfg.learners = learners(learner, mediator_density)?;
    cfg.folds = folds;
    cfg.target = parse_target(target)?;
    cfg.truth_draws = truth_draws;
    let inner = py.detach(|| run_study(&cfg)).map_err(to_py)?;
    Ok(SimReport { inner })
}

#[pymodule]
fn frontdoor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<EstimateResult>()?;
    m.add_class::<SimReport>()?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_ace, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(truth, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add("ESTIMATORS", EstimatorKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>())?;
    m.add("DGPS", Dgp::names())?;
    Ok(())
}
