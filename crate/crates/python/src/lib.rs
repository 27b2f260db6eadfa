//! Python bindings for the two-level FAS solver and its neural coarse operators.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use fas_surrogate::cli::config::{CoarseOp, ExperimentConfig};
use fas_surrogate::cli::model_io::{load_surrogate, mlp_from_text, mlp_to_text, save_surrogate, Manifest};
use fas_surrogate::fas::{self, CoarseOperatorKind};
use fas_surrogate::fem::{self, CoefficientModel, ExactSolution};
use fas_surrogate::mesh::{self, MeshHierarchy, Subdomain, TransferOperators};
use fas_surrogate::neural::{self, Dataset, TrainingConfig};
use fas_surrogate::sampling;
use fas_surrogate::surrogate;

fn to_py(e: fas_surrogate::Error) -> PyErr {
    match e {
        fas_surrogate::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for fas_surrogate::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn local4(v: &[f64], what: &str) -> PyResult<[f64; 4]> {
    v.try_into()
        .map_err(|_| PyValueError::new_err(format!("{what}: expected 4 values, got {}", v.len())))
}

/// Coarse and fine structured grids plus the transfer operators.
#[pyclass(name = "Hierarchy", module = "fas_surrogate_py", frozen, skip_from_py_object)]
struct PyHierarchy {
    mesh: MeshHierarchy,
    subdomains: Vec<Subdomain>,
    transfer: TransferOperators,
}

#[pymethods]
impl PyHierarchy {
    #[new]
    fn new(subdomains_per_side: usize, ratio: usize) -> PyResult<Self> {
        let (mesh, subdomains) = mesh::build_hierarchy(subdomains_per_side, ratio).py()?;
        let transfer = mesh::build_transfer(&mesh);
        Ok(Self {
            mesh,
            subdomains,
            transfer,
        })
    }

    #[getter]
    fn num_coarse(&self) -> usize {
        self.mesh.num_coarse()
    }

    #[getter]
    fn num_fine(&self) -> usize {
        self.mesh.num_fine()
    }

    #[getter]
    fn ratio(&self) -> usize {
        self.mesh.ratio
    }

    #[getter]
    fn num_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    fn fine_vertices(&self) -> Vec<(f64, f64)> {
        self.mesh.fine.vertices.iter().map(|v| (v[0], v[1])).collect()
    }

    fn fine_triangles(&self) -> Vec<(usize, usize, usize)> {
        self.mesh.fine.triangles.iter().map(|t| (t[0], t[1], t[2])).collect()
    }

    /// Coarse dofs (corner order ll, lr, ul, ur) of one subdomain.
    fn subdomain_dofs(&self, id: usize) -> PyResult<Vec<usize>> {
        self.subdomains
            .get(id)
            .map(|s| s.coarse_dofs.to_vec())
            .ok_or_else(|| PyValueError::new_err(format!("no subdomain {id}")))
    }

    fn prolong(&self, v_c: Vec<f64>) -> PyResult<Vec<f64>> {
        self.transfer.prolong(&v_c).py()
    }

    fn restrict(&self, w: Vec<f64>) -> PyResult<Vec<f64>> {
        self.transfer.restrict(&w).py()
    }

    fn project(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        self.transfer.project(&u).py()
    }
}

fn parse_exact(name: &str) -> PyResult<ExactSolution> {
    name.parse().py()
}

/// Fine-level nonlinear operator `F` on a hierarchy.
#[pyclass(name = "FineOperator", module = "fas_surrogate_py", frozen, skip_from_py_object)]
struct PyFineOperator {
    op: fem::FineOperator,
    hierarchy: Py<PyHierarchy>,
}

#[pymethods]
impl PyFineOperator {
    #[new]
    #[pyo3(signature = (hierarchy, coefficient = "one_plus_u2"))]
    fn new(hierarchy: Bound<'_, PyHierarchy>, coefficient: &str) -> PyResult<Self> {
        let model: CoefficientModel = coefficient.parse().py()?;
        let op = fem::FineOperator::new(&hierarchy.get().mesh, model);
        Ok(Self {
            op,
            hierarchy: hierarchy.unbind(),
        })
    }

    #[getter]
    fn coefficient(&self) -> &'static str {
        self.op.coefficient().name()
    }

    #[getter]
    fn num_dofs(&self) -> usize {
        self.op.num_dofs()
    }

    fn apply(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        self.op.apply(&u).py()
    }

    /// Dense Jacobian rows.
    fn jacobian(&self, u: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.op.jacobian(&u).py()?.to_dense())
    }

    fn galerkin_coarse_apply(&self, py: Python<'_>, v_c: Vec<f64>) -> PyResult<Vec<f64>> {
        let h = self.hierarchy.bind(py).get();
        self.op.galerkin_coarse_apply(&h.transfer, &v_c).py()
    }

    /// `G_T(u, g)` for subdomain `id` with 4-vectors in corner order.
    fn local_coarse_delta(&self, py: Python<'_>, id: usize, u: Vec<f64>, g: Vec<f64>) -> PyResult<Vec<f64>> {
        let h = self.hierarchy.bind(py).get();
        let sub = h
            .subdomains
            .get(id)
            .ok_or_else(|| PyValueError::new_err(format!("no subdomain {id}")))?;
        Ok(self.op.local_coarse_delta(sub, &u, &g).py()?.to_vec())
    }

    /// Global `G(u_c, g_c)` assembled from the exact local operators.
    fn coarse_delta(&self, py: Python<'_>, u_c: Vec<f64>, g_c: Vec<f64>) -> PyResult<Vec<f64>> {
        let h = self.hierarchy.bind(py).get();
        surrogate::assemble_delta(&self.op, &h.subdomains, &u_c, &g_c).py()
    }

    /// Nodal interpolant of `biquartic` or `cospi`.
    fn interpolate(&self, exact: &str) -> PyResult<Vec<f64>> {
        let e = parse_exact(exact)?;
        Ok(self.op.interpolate(|x, y| e.evaluate(x, y)))
    }

    fn manufactured_rhs(&self, exact: &str) -> PyResult<Vec<f64>> {
        let e = parse_exact(exact)?;
        Ok(self.op.manufactured_rhs(|x, y| e.evaluate(x, y)))
    }
}

#[pyfunction]
#[pyo3(signature = (dim, n, skip = 0))]
fn sobol_points(dim: usize, n: usize, skip: usize) -> PyResult<Vec<Vec<f64>>> {
    sampling::sobol_points(dim, n, skip).py()
}

#[pyfunction]
fn sample_box(center: Vec<f64>, half_width: f64, m: usize) -> PyResult<Vec<Vec<f64>>> {
    sampling::sample_box(&center, half_width, m).py()
}

#[pyfunction]
fn sample_ball(dim: usize, radius: f64, m: usize) -> PyResult<Vec<Vec<f64>>> {
    sampling::sample_ball(dim, radius, m).py()
}

/// Fully connected network: tanh hidden layers, linear output.
#[pyclass(name = "Mlp", module = "fas_surrogate_py", skip_from_py_object)]
#[derive(Clone)]
struct PyMlp {
    net: neural::Mlp,
}

#[pymethods]
impl PyMlp {
    #[new]
    #[pyo3(signature = (dims = vec![8, 16, 16, 16, 4], seed = 0))]
    fn new(dims: Vec<usize>, seed: u64) -> PyResult<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(PyValueError::new_err("dims needs at least two positive sizes"));
        }
        Ok(Self {
            net: neural::Mlp::new(&dims, seed),
        })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let net = mlp_from_text(text, std::path::Path::new("<string>")).py()?;
        Ok(Self { net })
    }

    fn to_text(&self) -> String {
        mlp_to_text(&self.net)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.net.dims()
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.net.num_params()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.net.forward(&x).py()
    }

    /// Trains in place; returns the per-epoch training MSE.
    #[pyo3(signature = (inputs, targets, epochs = 500, batch_size = 10, seed = 0, train_fraction = 0.8, learning_rate = 1e-3))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &mut self,
        py: Python<'_>,
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        epochs: usize,
        batch_size: usize,
        seed: u64,
        train_fraction: f64,
        learning_rate: f64,
    ) -> PyResult<Vec<f64>> {
        let data = Dataset::new(inputs, targets).py()?;
        let cfg = TrainingConfig {
            epochs,
            batch_size,
            seed,
            train_fraction,
            learning_rate,
            ..TrainingConfig::default()
        };
        let net = &mut self.net;
        let report = py.detach(|| neural::train(net, &data, &cfg)).py()?;
        Ok(report.train_loss)
    }

    /// `(mean relative l2, mean relative linf)` over the rows.
    fn relative_errors(&self, inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
        let data = Dataset::new(inputs, targets).py()?;
        let e = neural::relative_errors(&self.net, &data).py()?;
        Ok((e.l2, e.linf))
    }

    fn __eq__(&self, other: PyRef<'_, PyMlp>) -> bool {
        self.net == other.net
    }

    fn __repr__(&self) -> String {
        format!("Mlp(dims={:?})", self.net.dims())
    }
}

/// One network per subdomain, assembled into the global coarse delta-map.
#[pyclass(name = "GlobalSurrogate", module = "fas_surrogate_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGlobalSurrogate {
    inner: surrogate::GlobalSurrogate,
}

#[pymethods]
impl PyGlobalSurrogate {
    #[getter]
    fn num_subdomains(&self) -> usize {
        self.inner.locals.len()
    }

    fn network(&self, id: usize) -> PyResult<PyMlp> {
        self.inner
            .locals
            .iter()
            .find(|l| l.subdomain_id == id)
            .map(|l| PyMlp { net: l.net.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("no subdomain {id}")))
    }

    fn apply_global(&self, u_c: Vec<f64>, g_c: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply_global(&u_c, &g_c).py()
    }

    fn predict_local(&self, id: usize, u: Vec<f64>, g: Vec<f64>) -> PyResult<Vec<f64>> {
        let (u, g) = (local4(&u, "u")?, local4(&g, "g")?);
        let l = self
            .inner
            .locals
            .iter()
            .find(|l| l.subdomain_id == id)
            .ok_or_else(|| PyValueError::new_err(format!("no subdomain {id}")))?;
        Ok(l.predict(&u, &g).to_vec())
    }
}

/// Flat experiment configuration; keys match the CLI config file.
#[pyclass(name = "Config", module = "fas_surrogate_py", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyConfig {
    cfg: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut c = Self::default();
        if let Some(d) = overrides {
            for (k, v) in d.iter() {
                c.set(&k.extract::<String>()?, &v)?;
            }
        }
        Ok(c)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            cfg: ExperimentConfig::parse(text).py()?,
        })
    }

    /// Sets one key; lists are joined with commas, everything else uses `str`.
    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let text = if let Ok(items) = value.extract::<Vec<usize>>() {
            items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        } else if let Ok(b) = value.extract::<bool>() {
            b.to_string()
        } else {
            value.str()?.to_string()
        };
        self.cfg.set(key, &text).py()
    }

    #[getter]
    fn coarse_op(&self) -> &'static str {
        self.cfg.coarse_op.name()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.cfg.seed
    }
}

#[pyclass(name = "FasReport", module = "fas_surrogate_py", frozen, skip_from_py_object)]
struct PyFasReport {
    report: fas::FasReport,
}

#[pymethods]
impl PyFasReport {
    #[getter]
    fn converged(&self) -> bool {
        self.report.converged
    }

    #[getter]
    fn num_cycles(&self) -> usize {
        self.report.num_cycles()
    }

    #[getter]
    fn initial_residual(&self) -> f64 {
        self.report.initial_residual
    }

    #[getter]
    fn seed(&self) -> Option<u64> {
        self.report.seed
    }

    /// Relative residual after each cycle.
    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.report.cycles.iter().map(|c| c.relative_residual).collect()
    }

    #[getter]
    fn coarse_iterations(&self) -> Vec<usize> {
        self.report.cycles.iter().map(|c| c.coarse_iterations).collect()
    }

    fn __repr__(&self) -> String {
        let last = match self.report.final_residual() {
            Some(r) => format!("{r:e}"),
            None => "None".into(),
        };
        let conv = if self.report.converged { "True" } else { "False" };
        format!("FasReport(converged={conv}, cycles={}, final={last})", self.report.num_cycles())
    }
}

fn problem(cfg: &ExperimentConfig) -> PyResult<(fem::FineOperator, TransferOperators, Vec<Subdomain>)> {
    let (h, subs) = mesh::build_hierarchy(cfg.subdomains_per_side, cfg.ratio).py()?;
    let t = mesh::build_transfer(&h);
    Ok((fem::FineOperator::new(&h, cfg.coefficient), t, subs))
}

/// Trains the per-subdomain networks on the centred box.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn train_surrogate(py: Python<'_>, config: Option<PyRef<'_, PyConfig>>) -> PyResult<PyGlobalSurrogate> {
    let cfg = config.map(|c| c.cfg.clone()).unwrap_or_default();
    let (op, _, subs) = problem(&cfg)?;
    let spec = cfg.sample_spec().py()?;
    let training = cfg.training_config();
    let inner = py.detach(|| surrogate::train_all(&op, &subs, None, &spec, &training)).py()?;
    Ok(PyGlobalSurrogate { inner })
}

#[pyfunction]
fn save_models(dir: PathBuf, config: PyRef<'_, PyConfig>, s: PyRef<'_, PyGlobalSurrogate>) -> PyResult<Vec<PathBuf>> {
    let cfg = &config.cfg;
    let manifest = Manifest {
        subdomains_per_side: cfg.subdomains_per_side,
        ratio: cfg.ratio,
        coefficient: cfg.coefficient,
        spec: cfg.sample_spec().py()?,
        training_seed: cfg.training_seed(),
        subdomain_ids: s.inner.locals.iter().map(|l| l.subdomain_id).collect(),
    };
    save_surrogate(&dir, &manifest, &s.inner).py()
}

#[pyfunction]
fn load_models(dir: PathBuf, config: PyRef<'_, PyConfig>) -> PyResult<PyGlobalSurrogate> {
    let cfg = &config.cfg;
    let (_, inner) = load_surrogate(&dir, cfg.subdomains_per_side, cfg.ratio, cfg.coefficient).py()?;
    Ok(PyGlobalSurrogate { inner })
}

/// Runs FAS on the manufactured problem. The outside operator needs `surrogate`.
#[pyfunction]
#[pyo3(signature = (config = None, surrogate = None))]
fn solve(
    py: Python<'_>,
    config: Option<PyRef<'_, PyConfig>>,
    surrogate: Option<PyRef<'_, PyGlobalSurrogate>>,
) -> PyResult<(Vec<f64>, PyFasReport)> {
    let cfg = config.map(|c| c.cfg.clone()).unwrap_or_default();
    cfg.validate().py()?;
    let (op, t, subs) = problem(&cfg)?;
    let kind = match (cfg.coarse_op, surrogate) {
        (CoarseOp::True, _) => CoarseOperatorKind::True,
        (CoarseOp::Inside, _) => CoarseOperatorKind::TrainInside {
            spec: cfg.sample_spec().py()?,
            training: cfg.training_config(),
        },
        (CoarseOp::Outside, Some(s)) => CoarseOperatorKind::Pretrained(s.inner.clone()),
        (CoarseOp::Outside, None) => {
            return Err(PyValueError::new_err("coarse_op outside needs a trained surrogate"));
        }
    };
    let fas_cfg = cfg.fas_config();
    let (u, report) = py
        .detach(|| fas::solve_manufactured(&op, &t, &subs, cfg.exact_solution, &kind, &fas_cfg, cfg.seed))
        .py()?;
    Ok((u, PyFasReport { report }))
}

#[pymodule]
fn fas_surrogate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHierarchy>()?;
    m.add_class::<PyFineOperator>()?;
    m.add_class::<PyMlp>()?;
    m.add_class::<PyGlobalSurrogate>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyFasReport>()?;
    m.add_function(wrap_pyfunction!(sobol_points, m)?)?;
    m.add_function(wrap_pyfunction!(sample_box, m)?)?;
    m.add_function(wrap_pyfunction!(sample_ball, m)?)?;
    m.add_function(wrap_pyfunction!(train_surrogate, m)?)?;
    m.add_function(wrap_pyfunction!(save_models, m)?)?;
    m.add_function(wrap_pyfunction!(load_models, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add("COEFFICIENTS", CoefficientModel::ALL.iter().map(|c| c.name()).collect::<Vec<_>>())?;
    Ok(())
}
