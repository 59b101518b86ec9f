//! Python bindings for `minentlab`.

use minentlab::discretize::{covering_partition, greedy_packing_net, Metric};
use minentlab::entfrac::singlet_overlap_qk as qk;
use minentlab::entropy::{self, JointTable};
use minentlab::{BoundReport, ComplexMatrix, DensityOperator, MetricSpace, C64};
use minentlab_cli::config::{check, parse_config, CommandKind, ExperimentConfig, VerifyTarget};
use minentlab_cli::run::{run, Output};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// One evaluated inequality.
#[pyclass(name = "BoundReport", frozen, get_all)]
struct PyBoundReport {
    name: String,
    lhs: f64,
    rhs: f64,
    slack: f64,
    #[pyo3(name = "passed")]
    pass: bool,
    instance: String,
    seed: Option<u64>,
    config_hash: Option<String>,
}

impl From<BoundReport> for PyBoundReport {
    fn from(r: BoundReport) -> Self {
        Self {
            name: r.name,
            lhs: r.lhs,
            rhs: r.rhs,
            slack: r.slack,
            pass: r.pass,
            instance: r.instance,
            seed: r.seed,
            config_hash: r.config_hash,
        }
    }
}

#[pymethods]
impl PyBoundReport {
    fn __repr__(&self) -> String {
        let tag = if self.pass { "pass" } else { "FAIL" };
        format!("BoundReport({}: {} >= {}, slack {:.3e}, {tag})", self.name, self.lhs, self.rhs, self.slack)
    }
}

#[pyclass(name = "SdpSolution", frozen, get_all)]
struct PySdpSolution {
    primal_value: f64,
    dual_value: f64,
    gap: f64,
    hmin: f64,
    iterations: usize,
    status: String,
}

#[pymethods]
impl PySdpSolution {
    fn __repr__(&self) -> String {
        format!(
            "SdpSolution(primal={}, dual={}, gap={:.2e}, status={})",
            self.primal_value, self.dual_value, self.gap, self.status
        )
    }
}

fn table(rows: Vec<Vec<f64>>) -> PyResult<JointTable> {
    JointTable::from_nested(&rows).map_err(err)
}

fn density(matrix: Vec<Vec<C64>>, dims: Vec<usize>) -> PyResult<DensityOperator> {
    DensityOperator::new(ComplexMatrix::from_rows(&matrix).map_err(err)?, dims).map_err(err)
}

#[pyfunction]
fn binary_entropy(p: f64) -> PyResult<f64> {
    entropy::binary_entropy(p).map_err(err)
}

/// `H(A|B)` in bits for a joint table `p[a][b]`.
#[pyfunction]
fn conditional_shannon(p: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(entropy::conditional_shannon(&table(p)?))
}

/// `(success, hmin)` of the optimal guess of `A` from `B`.
#[pyfunction]
fn classical_hmin_success(p: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    let r = entropy::classical_hmin_success(&table(p)?).map_err(err)?;
    Ok((r.success, r.hmin))
}

/// Conditional min-entropy of a bipartite density matrix given as nested
/// lists of complex numbers.
#[pyfunction]
#[pyo3(signature = (matrix, dims, tol = 1e-8))]
fn solve_hmin(matrix: Vec<Vec<C64>>, dims: (usize, usize), tol: f64) -> PyResult<PySdpSolution> {
    let rho = density(matrix, vec![dims.0, dims.1])?;
    let sol = minentlab::solve_hmin(&rho, tol).map_err(err)?;
    let status = serde_json::to_value(sol.status).map_err(err)?;
    Ok(PySdpSolution {
        primal_value: sol.primal_value,
        dual_value: sol.dual_value,
        gap: sol.gap,
        hmin: sol.hmin(),
        iterations: sol.iterations,
        status: status.as_str().unwrap_or_default().to_string(),
    })
}

/// `H(R|B)` of a bipartite density matrix.
#[pyfunction]
fn conditional_von_neumann(matrix: Vec<Vec<C64>>, dims: (usize, usize)) -> PyResult<f64> {
    entropy::conditional_von_neumann(&density(matrix, vec![dims.0, dims.1])?).map_err(err)
}

#[pyfunction]
fn singlet_overlap_qk(amplitudes: Vec<C64>, dims: (usize, usize), k: usize) -> PyResult<f64> {
    let psi = DensityOperator::pure(&amplitudes, vec![dims.0, dims.1]).map_err(err)?;
    qk(&psi, k).map_err(err)
}

/// Greedy ε-packing/net of the given points. Returns the center indices
/// and the cell of every point.
#[pyfunction]
#[pyo3(name = "greedy_packing_net", signature = (points, epsilon, metric = "euclidean"))]
fn greedy_packing_net_py(points: Vec<Vec<f64>>, epsilon: f64, metric: &str) -> PyResult<(Vec<usize>, Vec<usize>)> {
    let metric = match metric {
        "euclidean" => Metric::Euclidean,
        "absolute-difference" => Metric::AbsoluteDifference,
        other => return Err(err(format!("unknown metric \"{other}\""))),
    };
    let dim = points.first().map_or(0, Vec::len);
    let bounds = (0..dim)
        .map(|k| {
            points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])))
        })
        .collect();
    let space = MetricSpace::new(points, metric, bounds).map_err(err)?;
    let disc = covering_partition(&greedy_packing_net(&space, epsilon).map_err(err)?).map_err(err)?;
    let centers = disc
        .centers()
        .iter()
        .map(|c| space.points().iter().position(|p| p == c).expect("centers are candidates"))
        .collect();
    Ok((centers, disc.cells().unwrap_or_default().to_vec()))
}

fn execute(cfg: &ExperimentConfig) -> PyResult<Output> {
    let diagnostics = check(cfg);
    if !diagnostics.is_empty() {
        let text: Vec<String> = diagnostics.iter().map(ToString::to_string).collect();
        return Err(err(text.join("; ")));
    }
    run(cfg).map_err(err)
}

/// Runs a JSON experiment configuration. Report-producing commands return a
/// list of `BoundReport`; `discretize` and `minent` return a dict.
#[pyfunction]
fn run_config(py: Python<'_>, config: &str) -> PyResult<Py<PyAny>> {
    let cfg = parse_config(config).map_err(|d| err(d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")))?;
    match execute(&cfg)? {
        Output::Reports(reports) => {
            let list: Vec<PyBoundReport> = reports.into_iter().map(Into::into).collect();
            Ok(list.into_pyobject(py)?.into_any().unbind())
        }
        Output::Document(doc, _) => {
            let json = py.import("json")?;
            Ok(json.call_method1("loads", (doc.to_string(),))?.unbind())
        }
    }
}

/// Shortcut for `verify` runs, e.g. `verify("thm1", partition_size=2,
/// channel="depolarizing:0.5")`.
#[pyfunction]
#[pyo3(signature = (target, suite = None, n = None, seed = None, partition_size = None, channel = None, tol = None))]
#[allow(clippy::too_many_arguments)]
fn verify(
    target: &str,
    suite: Option<String>,
    n: Option<usize>,
    seed: Option<u64>,
    partition_size: Option<usize>,
    channel: Option<String>,
    tol: Option<f64>,
) -> PyResult<Vec<PyBoundReport>> {
    let target: VerifyTarget = serde_json::from_value(serde_json::Value::String(target.into())).map_err(err)?;
    let mut cfg = ExperimentConfig::new(CommandKind::Verify);
    cfg.target = Some(target);
    cfg.suite = suite;
    cfg.n = n;
    cfg.seed = seed;
    cfg.partition_size = partition_size;
    cfg.channel = channel;
    cfg.tol = tol;
    match execute(&cfg)? {
        Output::Reports(reports) => Ok(reports.into_iter().map(Into::into).collect()),
        Output::Document(..) => unreachable!("verify produces reports"),
    }
}

#[pymodule]
fn pyminentlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBoundReport>()?;
    m.add_class::<PySdpSolution>()?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_shannon, m)?)?;
    m.add_function(wrap_pyfunction!(classical_hmin_success, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_von_neumann, m)?)?;
    m.add_function(wrap_pyfunction!(solve_hmin, m)?)?;
    m.add_function(wrap_pyfunction!(singlet_overlap_qk, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_packing_net_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
