//! Python bindings: confidence distributions, the three NFDR estimators,
//! rank-doubling LFDR, BH, and the simulation helpers.

use lfdr_core::confdist::{ConfidenceDistribution as CoreCd, IntervalSide};
use lfdr_core::ingest::{load_abundance_csv, shift_log_transform, two_sample_t_pvalues};
use lfdr_core::lfdr::{bh_lfdr_link, lfdr_estimates, PValueEntry, PValueSet};
use lfdr_core::nfdr::{self, CapPlacement, EstimatorKind, MeanMethod, MeanOptions};
use lfdr_core::simkit::{self, MetricPooling, SimulationConfig};
use lfdr_core::{Error, Estimator, LfdrOptions};
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type LfdrRow = (String, f64, usize, f64, f64);
type MetricsTuple = (f64, usize, String, f64, f64, f64, usize);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numeric(_) => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn estimator(name: &str, weight: Option<f64>, mc_draws: usize, seed: u64) -> PyResult<Estimator> {
    Ok(match name {
        "mle" => Estimator::Mle,
        "corrected" => Estimator::CorrectedMedian {
            weight: weight.unwrap_or(1.0),
        },
        "mean" => Estimator::PosteriorMean(MeanOptions {
            weight: weight.unwrap_or(0.5),
            method: MeanMethod::MonteCarlo { draws: mc_draws, seed },
            cap: CapPlacement::PerDraw,
        }),
        other => return Err(PyValueError::new_err(format!("unknown estimator '{other}'"))),
    })
}

fn pvalue_set(pvalues: Vec<f64>, ids: Option<Vec<String>>, seed: u64) -> PyResult<PValueSet> {
    let ids = match ids {
        Some(ids) if ids.len() != pvalues.len() => {
            return Err(PyValueError::new_err("ids and pvalues differ in length"))
        }
        Some(ids) => ids,
        None => (1..=pvalues.len()).map(|i| i.to_string()).collect(),
    };
    let entries = ids.into_iter().zip(pvalues).map(|(id, p)| PValueEntry { id, p }).collect();
    PValueSet::new(entries, seed).map_err(to_py)
}

/// Confidence distribution of a binomial success probability.
#[pyclass(name = "ConfidenceDistribution", frozen, module = "lfdr_py")]
struct PyConfidenceDistribution {
    inner: CoreCd,
}

#[pymethods]
impl PyConfidenceDistribution {
    #[new]
    #[pyo3(signature = (trials, successes, weight = 0.5))]
    fn new(trials: u64, successes: u64, weight: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CoreCd::new(trials, successes, weight).map_err(to_py)?,
        })
    }

    #[getter]
    fn trials(&self) -> u64 {
        self.inner.trials()
    }

    #[getter]
    fn successes(&self) -> u64 {
        self.inner.successes()
    }

    #[getter]
    fn weight(&self) -> f64 {
        self.inner.weight()
    }

    fn significance(&self, pi: f64) -> PyResult<f64> {
        self.inner.significance(pi).map_err(to_py)
    }

    fn density(&self, pi: f64) -> PyResult<f64> {
        self.inner.density(pi).map_err(to_py)
    }

    fn inverse_significance(&self, s: f64) -> PyResult<f64> {
        self.inner.inverse_significance(s).map_err(to_py)
    }

    fn quantile(&self, u: f64) -> PyResult<f64> {
        self.inner.quantile(u).map_err(to_py)
    }

    fn attainable_range(&self) -> (f64, f64) {
        self.inner.attainable_range()
    }

    /// `side` is "lower" for `[L, 1]` or "upper" for `[0, U]`.
    #[pyo3(signature = (alpha, side = "lower"))]
    fn one_sided_interval(&self, alpha: f64, side: &str) -> PyResult<(f64, f64)> {
        let side = match side {
            "lower" => IntervalSide::LowerBounded,
            "upper" => IntervalSide::UpperBounded,
            other => return Err(PyValueError::new_err(format!("unknown side '{other}'"))),
        };
        let i = self.inner.one_sided_interval(alpha, side).map_err(to_py)?;
        Ok((i.lower, i.upper))
    }

    #[pyo3(signature = (n_draws, seed = 0))]
    fn sample(&self, n_draws: usize, seed: u64) -> PyResult<Vec<f64>> {
        self.inner.sample_parameter(n_draws, seed).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "ConfidenceDistribution(trials={}, successes={}, weight={})",
            self.inner.trials(),
            self.inner.successes(),
            self.inner.weight()
        )
    }
}

#[pyfunction]
fn mle_nfdr(alpha: f64, x: u64, n: u64) -> PyResult<f64> {
    Ok(nfdr::mle_nfdr(alpha, x, n).map_err(to_py)?.value)
}

#[pyfunction]
#[pyo3(signature = (alpha, x, n, weight = 1.0))]
fn corrected_nfdr(alpha: f64, x: u64, n: u64, weight: f64) -> PyResult<f64> {
    Ok(nfdr::corrected_nfdr(alpha, x, n, weight).map_err(to_py)?.value)
}

/// Returns `(value, std_error)`; the standard error is None for quadrature.
#[pyfunction]
#[pyo3(signature = (alpha, x, n, weight = 0.5, method = "monte_carlo", draws = 100, seed = 0, tolerance = 1e-10, cap = "per_draw"))]
#[allow(clippy::too_many_arguments)]
fn mean_nfdr(
    alpha: f64,
    x: u64,
    n: u64,
    weight: f64,
    method: &str,
    draws: usize,
    seed: u64,
    tolerance: f64,
    cap: &str,
) -> PyResult<(f64, Option<f64>)> {
    let method = match method {
        "monte_carlo" => MeanMethod::MonteCarlo { draws, seed },
        "quadrature" => MeanMethod::Quadrature { tolerance },
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    let cap = match cap {
        "per_draw" => CapPlacement::PerDraw,
        "final_mean" => CapPlacement::FinalMean,
        other => return Err(PyValueError::new_err(format!("unknown cap '{other}'"))),
    };
    let est = nfdr::mean_nfdr(alpha, x, n, &MeanOptions { weight, method, cap }).map_err(to_py)?;
    Ok((est.value, est.std_error))
}

/// Rows `(id, p, rank, raw_lfdr, monotone_lfdr)` in rank order.
#[pyfunction]
#[pyo3(signature = (pvalues, ids = None, estimator = "corrected", weight = None, mc_draws = 100, seed = 0, monotone = true))]
#[allow(clippy::too_many_arguments)]
fn lfdr(
    pvalues: Vec<f64>,
    ids: Option<Vec<String>>,
    estimator: &str,
    weight: Option<f64>,
    mc_draws: usize,
    seed: u64,
    monotone: bool,
) -> PyResult<Vec<LfdrRow>> {
    let set = pvalue_set(pvalues, ids, seed)?;
    let opts = LfdrOptions {
        estimator: self::estimator(estimator, weight, mc_draws, seed)?,
        enforce_monotone: monotone,
    };
    let r = lfdr_estimates(&set, &opts).map_err(to_py)?;
    Ok(r.rows
        .into_iter()
        .map(|r| (r.id, r.p, r.rank, r.raw_estimate, r.monotone_estimate))
        .collect())
}

#[pyfunction]
fn enforce_monotonicity(estimates: Vec<f64>) -> Vec<f64> {
    lfdr_core::lfdr::enforce_monotonicity(&estimates)
}

/// BH rejections at level `q` with the MLE LFDR at the median rejected rank.
#[pyfunction]
#[pyo3(signature = (pvalues, q, ids = None, seed = 0))]
fn bh(py: Python<'_>, pvalues: Vec<f64>, q: f64, ids: Option<Vec<String>>, seed: u64) -> PyResult<Bound<'_, PyDict>> {
    let set = pvalue_set(pvalues, ids, seed)?;
    let link = bh_lfdr_link(&set, q).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("rejected", link.rejection.rejected)?;
    d.set_item("threshold_rank", link.rejection.threshold_rank)?;
    d.set_item("threshold_p", link.rejection.threshold_p)?;
    match link.median {
        Some(m) => {
            let md = PyDict::new(py);
            md.set_item("rank", m.rank)?;
            md.set_item("id", m.id)?;
            md.set_item("p", m.p)?;
            md.set_item("lfdr_mle", m.lfdr_mle)?;
            md.set_item("lfdr_mle_monotone", m.lfdr_mle_monotone)?;
            d.set_item("median", md)?;
        }
        None => d.set_item("median", py.None())?,
    }
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (n, alpha, pi, estimator = "corrected", weight = None, mc_draws = 100, seed = 0))]
fn exact_small_n_coverage(
    n: u64,
    alpha: f64,
    pi: f64,
    estimator: &str,
    weight: Option<f64>,
    mc_draws: usize,
    seed: u64,
) -> PyResult<f64> {
    let e = self::estimator(estimator, weight, mc_draws, seed)?;
    simkit::exact_small_n_coverage(n, alpha, pi, &e).map_err(to_py)
}

/// Returns `(statistics, truth_labels, p_values)`.
#[pyfunction]
#[pyo3(signature = (pi0, n, delta = 2.0, seed = 0))]
fn generate_dataset(pi0: f64, n: usize, delta: f64, seed: u64) -> PyResult<(Vec<f64>, Vec<u8>, Vec<f64>)> {
    let ds = simkit::generate_dataset(pi0, n, delta, seed).map_err(to_py)?;
    Ok((ds.statistics, ds.truth_labels, ds.p_values))
}

#[pyfunction]
#[pyo3(signature = (p, pi0, delta = 2.0))]
fn true_lfdr(p: f64, pi0: f64, delta: f64) -> PyResult<f64> {
    simkit::true_lfdr(p, pi0, delta).map_err(to_py)
}

#[pyfunction]
fn pearson_skewness(samples: Vec<f64>) -> PyResult<f64> {
    simkit::pearson_skewness(&samples).map_err(to_py)
}

/// Rows `(pi0, n, estimator, rmse, conservatism_proportion, bias, replicates)`.
#[pyfunction]
#[pyo3(signature = (pi0_grid = None, n_grid = None, delta = 2.0, replicates = 100, seed = 20_100_409, estimators = None, mc_draws = 100, pooling = "pooled"))]
#[allow(clippy::too_many_arguments)]
fn run_grid(
    pi0_grid: Option<Vec<f64>>,
    n_grid: Option<Vec<usize>>,
    delta: f64,
    replicates: usize,
    seed: u64,
    estimators: Option<Vec<String>>,
    mc_draws: usize,
    pooling: &str,
) -> PyResult<Vec<MetricsTuple>> {
    let d = SimulationConfig::default();
    let estimators = match estimators {
        None => d.estimators.clone(),
        Some(names) => names
            .iter()
            .map(|s| match s.as_str() {
                "mle" => Ok(EstimatorKind::Mle),
                "corrected" => Ok(EstimatorKind::CorrectedMedian),
                "mean" => Ok(EstimatorKind::PosteriorMean),
                other => Err(PyValueError::new_err(format!("unknown estimator '{other}'"))),
            })
            .collect::<PyResult<_>>()?,
    };
    let pooling = match pooling {
        "pooled" => MetricPooling::Pooled,
        "per_replicate" => MetricPooling::PerReplicate,
        other => return Err(PyValueError::new_err(format!("unknown pooling '{other}'"))),
    };
    let config = SimulationConfig {
        pi0_grid: pi0_grid.unwrap_or(d.pi0_grid.clone()),
        n_grid: n_grid.unwrap_or(d.n_grid.clone()),
        delta,
        replicates,
        seed,
        estimators,
        mc_draws,
        pooling,
        ..d
    };
    let rows = simkit::run_grid(&config).map_err(to_py)?;
    Ok(rows
        .into_iter()
        .map(|r| {
            (
                r.pi0,
                r.n,
                r.estimator.as_str().to_string(),
                r.rmse,
                r.conservatism_proportion,
                r.bias,
                r.replicate_count,
            )
        })
        .collect())
}

/// Rows `(feature, t, df, p)` from an abundance CSV.
#[pyfunction]
#[pyo3(signature = (path, shift_log = true))]
fn ttest_csv(path: &str, shift_log: bool) -> PyResult<Vec<(String, f64, u64, f64)>> {
    let mut m = load_abundance_csv(path).map_err(to_py)?;
    if shift_log {
        m = shift_log_transform(&m).map_err(to_py)?;
    }
    let report = two_sample_t_pvalues(&m).map_err(to_py)?;
    Ok(report.tests.into_iter().map(|t| (t.feature, t.t, t.df, t.p)).collect())
}

#[pymodule]
fn lfdr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfidenceDistribution>()?;
    m.add_function(wrap_pyfunction!(mle_nfdr, m)?)?;
    m.add_function(wrap_pyfunction!(corrected_nfdr, m)?)?;
    m.add_function(wrap_pyfunction!(mean_nfdr, m)?)?;
    m.add_function(wrap_pyfunction!(lfdr, m)?)?;
    m.add_function(wrap_pyfunction!(enforce_monotonicity, m)?)?;
    m.add_function(wrap_pyfunction!(bh, m)?)?;
    m.add_function(wrap_pyfunction!(exact_small_n_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(true_lfdr, m)?)?;
    m.add_function(wrap_pyfunction!(pearson_skewness, m)?)?;
    m.add_function(wrap_pyfunction!(run_grid, m)?)?;
    m.add_function(wrap_pyfunction!(ttest_csv, m)?)?;
    Ok(())
}
