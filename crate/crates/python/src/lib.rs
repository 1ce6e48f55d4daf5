//! Python bindings: parameters, operating points, the analytic formulas, Monte
//! Carlo runs and bound checks.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use lsmimo::analytic::{self, AnalyticContext};
use lsmimo::config::{ClusteringMode, OperatingPoint, SystemParams, UserModel};
use lsmimo::montecarlo::{self, BoundReport, RateStats, SimulationPlan};
use lsmimo::Error;

fn to_py(e: Error) -> PyErr {
    if e.is_usage() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

#[pyclass(name = "SystemParams", module = "lsmimo_py", from_py_object)]
#[derive(Clone)]
struct PySystemParams {
    inner: SystemParams,
}

#[pymethods]
impl PySystemParams {
    /// Reference parameters, with any keyword overriding one field.
    #[new]
    #[pyo3(signature = (*, bs_density=None, bandwidth_hz=None, max_power_dbm=None, noise_psd_dbm_hz=None,
                        noise_figure_db=None, snr_gap_db=None, pathloss_exponent=None,
                        reference_distance_m=None, users_per_cell=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        bs_density: Option<f64>,
        bandwidth_hz: Option<f64>,
        max_power_dbm: Option<f64>,
        noise_psd_dbm_hz: Option<f64>,
        noise_figure_db: Option<f64>,
        snr_gap_db: Option<f64>,
        pathloss_exponent: Option<f64>,
        reference_distance_m: Option<f64>,
        users_per_cell: Option<usize>,
    ) -> PyResult<Self> {
        let r = SystemParams::reference();
        let inner = SystemParams {
            bs_density: bs_density.unwrap_or(r.bs_density),
            bandwidth_hz: bandwidth_hz.unwrap_or(r.bandwidth_hz),
            max_power_dbm: max_power_dbm.unwrap_or(r.max_power_dbm),
            noise_psd_dbm_hz: noise_psd_dbm_hz.unwrap_or(r.noise_psd_dbm_hz),
            noise_figure_db: noise_figure_db.unwrap_or(r.noise_figure_db),
            snr_gap_db: snr_gap_db.unwrap_or(r.snr_gap_db),
            pathloss_exponent: pathloss_exponent.unwrap_or(r.pathloss_exponent),
            reference_distance_m: reference_distance_m.unwrap_or(r.reference_distance_m),
            users_per_cell: users_per_cell.unwrap_or(r.users_per_cell),
        };
        inner.validate().map_err(to_py)?;
        Ok(PySystemParams { inner })
    }

    #[getter]
    fn bs_density(&self) -> f64 {
        self.inner.bs_density
    }
    #[getter]
    fn bandwidth_hz(&self) -> f64 {
        self.inner.bandwidth_hz
    }
    #[getter]
    fn max_power_dbm(&self) -> f64 {
        self.inner.max_power_dbm
    }
    #[getter]
    fn noise_psd_dbm_hz(&self) -> f64 {
        self.inner.noise_psd_dbm_hz
    }
    #[getter]
    fn noise_figure_db(&self) -> f64 {
        self.inner.noise_figure_db
    }
    #[getter]
    fn snr_gap_db(&self) -> f64 {
        self.inner.snr_gap_db
    }
    #[getter]
    fn pathloss_exponent(&self) -> f64 {
        self.inner.pathloss_exponent
    }
    #[getter]
    fn reference_distance_m(&self) -> f64 {
        self.inner.reference_distance_m
    }
    #[getter]
    fn users_per_cell(&self) -> usize {
        self.inner.users_per_cell
    }

    /// Path-loss gain at `distance_m`.
    fn pathloss(&self, distance_m: f64) -> f64 {
        self.inner.pathloss(distance_m)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(
    name = "OperatingPoint",
    module = "lsmimo_py",
    frozen,
    eq,
    hash,
    from_py_object
)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyOperatingPoint {
    inner: OperatingPoint,
}

#[pymethods]
impl PyOperatingPoint {
    /// From (M, K, O); ζ = M + 1 − K − O.
    #[new]
    fn new(antennas: usize, multiplexing: usize, nulling: usize) -> PyResult<Self> {
        OperatingPoint::new(antennas, multiplexing, nulling)
            .map(|inner| PyOperatingPoint { inner })
            .map_err(to_py)
    }

    /// From (K, ζ, O); M = K + ζ + O − 1.
    #[staticmethod]
    fn from_triple(multiplexing: usize, diversity: usize, nulling: usize) -> PyResult<Self> {
        OperatingPoint::from_triple(multiplexing, diversity, nulling)
            .map(|inner| PyOperatingPoint { inner })
            .map_err(to_py)
    }

    #[getter]
    fn antennas(&self) -> usize {
        self.inner.antennas
    }
    #[getter]
    fn multiplexing(&self) -> usize {
        self.inner.multiplexing
    }
    #[getter]
    fn diversity(&self) -> usize {
        self.inner.diversity
    }
    #[getter]
    fn nulling(&self) -> usize {
        self.inner.nulling
    }

    fn triple(&self) -> (usize, usize, usize) {
        self.inner.triple()
    }

    fn loading_factor(&self) -> f64 {
        self.inner.loading_factor()
    }

    fn __repr__(&self) -> String {
        let (k, z, o) = self.inner.triple();
        format!(
            "OperatingPoint(M={}, K={k}, zeta={z}, O={o})",
            self.inner.antennas
        )
    }
}

#[pyclass(name = "RateStats", module = "lsmimo_py", frozen)]
struct PyRateStats {
    inner: RateStats,
}

#[pymethods]
impl PyRateStats {
    #[getter]
    fn operating_point(&self) -> PyOperatingPoint {
        PyOperatingPoint {
            inner: self.inner.operating_point,
        }
    }
    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.clustering_mode.label()
    }
    #[getter]
    fn sum_rate(&self) -> f64 {
        self.inner.per_bs_sum_rate
    }
    #[getter]
    fn sum_rate_ci(&self) -> f64 {
        self.inner.per_bs_sum_rate_ci
    }
    #[getter]
    fn p10(&self) -> f64 {
        self.inner.p10()
    }
    #[getter]
    fn p10_ci(&self) -> f64 {
        self.inner.p10_ci()
    }
    #[getter]
    fn samples(&self) -> usize {
        self.inner.sample_count()
    }
    #[getter]
    fn realizations(&self) -> usize {
        self.inner.realizations
    }
    /// Sorted per-user rates in bits/s/Hz.
    #[getter]
    fn rates(&self) -> Vec<f64> {
        self.inner.rates.sorted().to_vec()
    }

    fn percentile(&self, p: f64) -> PyResult<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(PyValueError::new_err("p must lie in [0, 1]"));
        }
        Ok(self.inner.percentile(p))
    }

    fn cdf(&self, rate: f64) -> f64 {
        self.inner.cdf(rate)
    }

    fn __repr__(&self) -> String {
        format!(
            "RateStats({}, {}, sum_rate={:.4}, p10={:.4}, samples={})",
            self.inner.operating_point,
            self.mode(),
            self.sum_rate(),
            self.p10(),
            self.samples()
        )
    }
}

#[pyclass(name = "BoundReport", module = "lsmimo_py", frozen)]
struct PyBoundReport {
    inner: BoundReport,
}

#[pymethods]
impl PyBoundReport {
    #[getter]
    fn samples(&self) -> usize {
        self.inner.samples
    }
    /// (κ, bound, empirical CCDF, CI half-width) per grid point.
    #[getter]
    fn rows(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner
            .rows
            .iter()
            .map(|r| (r.kappa, r.bound, r.empirical, r.ci))
            .collect()
    }
    fn violations(&self) -> usize {
        self.inner.violations()
    }
    fn tight_within_ci(&self) -> bool {
        self.inner.tight_within_ci()
    }
}

fn context(params: &PySystemParams, op: &PyOperatingPoint) -> PyResult<AnalyticContext> {
    AnalyticContext::new(params.inner, op.inner).map_err(to_py)
}

/// Per-BS ergodic sum rate in bits/s/Hz.
#[pyfunction]
fn ergodic_sum_rate(py: Python<'_>, params: PySystemParams, op: PyOperatingPoint) -> PyResult<f64> {
    let ctx = context(&params, &op)?;
    py.detach(|| ctx.ergodic_sum_rate()).map_err(to_py)
}

/// Upper bound on P(rate ≥ κ) at each κ.
#[pyfunction]
fn rate_ccdf_upper(
    py: Python<'_>,
    params: PySystemParams,
    op: PyOperatingPoint,
    kappas: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let ctx = context(&params, &op)?;
    py.detach(|| {
        kappas
            .iter()
            .map(|&k| ctx.rate_ccdf_upper(k))
            .collect::<lsmimo::Result<Vec<_>>>()
    })
    .map_err(to_py)
}

/// Sum rate of every operating point of M antennas.
#[pyfunction]
fn sum_rate_table(
    py: Python<'_>,
    params: PySystemParams,
    antennas: usize,
) -> PyResult<Vec<(PyOperatingPoint, f64)>> {
    let table = py
        .detach(|| analytic::sum_rate_table(&params.inner, antennas))
        .map_err(to_py)?;
    Ok(table
        .into_iter()
        .map(|(inner, r)| (PyOperatingPoint { inner }, r))
        .collect())
}

/// Best operating point of M antennas and its sum rate.
#[pyfunction]
fn argmax_sum_rate(
    py: Python<'_>,
    params: PySystemParams,
    antennas: usize,
) -> PyResult<(PyOperatingPoint, f64)> {
    let (inner, rate) = py
        .detach(|| analytic::argmax_sum_rate(&params.inner, antennas))
        .map_err(to_py)?;
    Ok((PyOperatingPoint { inner }, rate))
}

fn parse_mode(mode: &str) -> PyResult<ClusteringMode> {
    ClusteringMode::parse(mode).ok_or_else(|| {
        PyValueError::new_err(format!("mode must be fixed or adaptive, got {mode:?}"))
    })
}

/// Full-fidelity Monte Carlo run; one result per operating point.
#[pyfunction]
#[pyo3(signature = (params, operating_points, mode="fixed", user_model="fixed_kb", realizations=200, seed=1, workers=0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    params: PySystemParams,
    operating_points: Vec<PyOperatingPoint>,
    mode: &str,
    user_model: &str,
    realizations: usize,
    seed: u64,
    workers: usize,
) -> PyResult<Vec<PyRateStats>> {
    let mode = parse_mode(mode)?;
    let users = UserModel::parse(user_model).ok_or_else(|| {
        PyValueError::new_err(format!(
            "user_model must be fixed_kb or ppp_users, got {user_model:?}"
        ))
    })?;
    let ops: Vec<OperatingPoint> = operating_points.iter().map(|o| o.inner).collect();
    let mut plan =
        SimulationPlan::new(&params.inner, ops, mode, users, realizations, seed).map_err(to_py)?;
    plan.workers = workers;
    let stats = py
        .detach(|| montecarlo::run(&plan, &params.inner))
        .map_err(to_py)?;
    Ok(stats
        .into_iter()
        .map(|inner| PyRateStats { inner })
        .collect())
}

/// Compares the CCDF bound with an idealized-model simulation on a κ grid
/// from 0 to the 99th-percentile rate.
#[pyfunction]
#[pyo3(signature = (params, op, realizations=2000, seed=1, kappa_points=30))]
fn validate_bound(
    py: Python<'_>,
    params: PySystemParams,
    op: PyOperatingPoint,
    realizations: usize,
    seed: u64,
    kappa_points: usize,
) -> PyResult<PyBoundReport> {
    let ctx = context(&params, &op)?;
    let plan = SimulationPlan::analytic_model(vec![op.inner], realizations, seed);
    let report = py
        .detach(|| {
            let stats = montecarlo::run(&plan, &params.inner)?;
            let grid = montecarlo::kappa_grid(&stats[0], kappa_points);
            montecarlo::compare_to_analytic(&stats[0], &ctx, &grid)
        })
        .map_err(to_py)?;
    Ok(PyBoundReport { inner: report })
}

#[pymodule]
fn lsmimo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyOperatingPoint>()?;
    m.add_class::<PyRateStats>()?;
    m.add_class::<PyBoundReport>()?;
    m.add_function(wrap_pyfunction!(ergodic_sum_rate, m)?)?;
    m.add_function(wrap_pyfunction!(rate_ccdf_upper, m)?)?;
    m.add_function(wrap_pyfunction!(sum_rate_table, m)?)?;
    m.add_function(wrap_pyfunction!(argmax_sum_rate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(validate_bound, m)?)?;
    Ok(())
}
