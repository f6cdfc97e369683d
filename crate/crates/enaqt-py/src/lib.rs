//! Python bindings: the network model, trajectory propagation,
//! efficiency evaluation, the dephasing sweep and the LQU in one
//! extension module. Matrices cross the boundary as nested lists of
//! complex numbers.

use ndarray::Array2;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use enaqt::correlations::{
    attach_lqu, embed_single_excitation, lqu_general, lqu_single_excitation, PartitionSpec,
};
use enaqt::dynamics::{
    build_lindbladian, default_dt, efficiency_by_integration, efficiency_direct, propagate_expm,
    time_grid,
};
use enaqt::experiments::{
    run_dephasing_sweep, EfficiencyMethod, SweepConfig,
};
use enaqt::linalg::CMatrix;
use enaqt::model::{fmo3_preset, localized_state, ModelConfig, NetworkModel};

fn to_py_err(e: enaqt::Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A uniform rate or one rate per site, as accepted from Python.
#[derive(FromPyObject)]
enum Rates {
    Uniform(f64),
    PerSite(Vec<f64>),
}

impl Rates {
    fn resolve(self, n: usize) -> Vec<f64> {
        match self {
            Rates::Uniform(x) => vec![x; n],
            Rates::PerSite(v) => v,
        }
    }
}

fn square_from_rows(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let mut m = Array2::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(PyValueError::new_err(format!(
                "row {} has {} entries, expected {n}",
                i + 1,
                row.len()
            )));
        }
        for (j, &x) in row.iter().enumerate() {
            m[[i, j]] = x;
        }
    }
    Ok(m)
}

fn complex_square_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    let mut m = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(PyValueError::new_err(format!(
                "row {} has {} entries, expected {n}",
                i + 1,
                row.len()
            )));
        }
        for (j, &z) in row.iter().enumerate() {
            m[[i, j]] = z;
        }
    }
    Ok(m)
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[[i, j]]).collect())
        .collect()
}

/// Excitonic network: site energies and couplings plus the dephasing,
/// dissipation and sink rates.
#[pyclass(frozen, module = "enaqt")]
struct Model {
    inner: NetworkModel,
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (energies_cm1, couplings_cm1, dissipation_ps1, sink_site, sink_rate_ps1, dephasing_ps1=None, hbar_cm1_ps=None))]
    fn new(
        energies_cm1: Vec<f64>,
        couplings_cm1: Vec<Vec<f64>>,
        dissipation_ps1: Rates,
        sink_site: usize,
        sink_rate_ps1: f64,
        dephasing_ps1: Option<Rates>,
        hbar_cm1_ps: Option<f64>,
    ) -> PyResult<Self> {
        let n = energies_cm1.len();
        let couplings = square_from_rows(couplings_cm1)?;
        let inner = NetworkModel::new(
            energies_cm1,
            couplings,
            dephasing_ps1.map(|r| r.resolve(n)),
            dissipation_ps1.resolve(n),
            sink_site,
            sink_rate_ps1,
            hbar_cm1_ps.unwrap_or(enaqt::model::HBAR_CM1_PS),
        )
        .map_err(to_py_err)?;
        Ok(Model { inner })
    }

    /// The built-in three-site network preset.
    #[staticmethod]
    fn fmo3() -> Self {
        Model {
            inner: fmo3_preset(),
        }
    }

    /// Builds a model from the config JSON schema used by the CLI.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let cfg = ModelConfig::parse(text).map_err(to_py_err)?;
        Ok(Model {
            inner: cfg.to_model().map_err(to_py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        let cfg = ModelConfig::from_model(&self.inner, 1);
        serde_json::to_string_pretty(&cfg)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }

    #[getter]
    fn sink_site(&self) -> usize {
        self.inner.sink_site()
    }

    #[getter]
    fn sink_rate_ps1(&self) -> f64 {
        self.inner.sink_rate_ps1()
    }

    #[getter]
    fn energies_cm1(&self) -> Vec<f64> {
        self.inner.energies_cm1().to_vec()
    }

    #[getter]
    fn dephasing_ps1(&self) -> Option<Vec<f64>> {
        self.inner.dephasing_ps1().map(|r| r.to_vec())
    }

    #[getter]
    fn dissipation_ps1(&self) -> Vec<f64> {
        self.inner.dissipation_ps1().to_vec()
    }

    fn with_uniform_dephasing(&self, gamma_ps1: f64) -> PyResult<Self> {
        Ok(Model {
            inner: self
                .inner
                .with_uniform_dephasing(gamma_ps1)
                .map_err(to_py_err)?,
        })
    }

    fn with_uniform_dissipation(&self, rate_ps1: f64) -> PyResult<Self> {
        Ok(Model {
            inner: self
                .inner
                .with_uniform_dissipation(rate_ps1)
                .map_err(to_py_err)?,
        })
    }

    fn with_sink_rate(&self, rate_ps1: f64) -> PyResult<Self> {
        Ok(Model {
            inner: self.inner.with_sink_rate(rate_ps1).map_err(to_py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(n_sites={}, sink_site={}, sink_rate_ps1={})",
            self.inner.n_sites(),
            self.inner.sink_site(),
            self.inner.sink_rate_ps1()
        )
    }
}

/// Propagates one trajectory and returns its time series (and the final
/// state) as a dict.
#[pyfunction]
#[pyo3(signature = (model, t_end, gamma=None, dt=None, initial_site=1, lqu=false, lqu_normalize=false))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    model: &Model,
    t_end: f64,
    gamma: Option<f64>,
    dt: Option<f64>,
    initial_site: usize,
    lqu: bool,
    lqu_normalize: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let m = &model.inner;
    let rates = gamma.map(|g| vec![g; m.n_sites()]);
    let l = build_lindbladian(m, rates.as_deref()).map_err(to_py_err)?;
    let fastest = rates
        .as_deref()
        .or(m.dephasing_ps1())
        .map(|r| r.iter().cloned().fold(0.0, f64::max))
        .unwrap_or(0.0);
    let dt = dt.unwrap_or_else(|| default_dt(fastest));
    if !(t_end > 0.0 && dt > 0.0 && dt <= t_end) {
        return Err(PyValueError::new_err(format!(
            "need 0 < dt <= t_end, got dt {dt} and t_end {t_end}"
        )));
    }
    let rho0 = localized_state(m, initial_site).map_err(to_py_err)?;
    let mut traj = propagate_expm(&l, &rho0, &time_grid(t_end, dt)).map_err(to_py_err)?;
    if lqu {
        attach_lqu(&mut traj, lqu_normalize).map_err(to_py_err)?;
    }

    let obs = traj.observables();
    let out = PyDict::new(py);
    out.set_item("times_ps", traj.times().to_vec())?;
    out.set_item("p_g", obs.p_g.clone())?;
    out.set_item("sites", obs.sites.clone())?;
    out.set_item("p_rc", obs.p_rc.clone())?;
    if let Some(series) = &obs.lqu {
        out.set_item("lqu", series.clone())?;
    }
    let last = traj.states().last().expect("nonempty trajectory");
    out.set_item("final_state", matrix_to_rows(last.matrix()))?;
    Ok(out)
}

/// Transport efficiency at one dephasing rate.
#[pyfunction]
#[pyo3(signature = (model, gamma, method="direct", initial_site=1, t_max=2e4, tol=1e-6))]
fn efficiency<'py>(
    py: Python<'py>,
    model: &Model,
    gamma: f64,
    method: &str,
    initial_site: usize,
    t_max: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = &model.inner;
    let method: EfficiencyMethod = method.parse().map_err(PyValueError::new_err)?;
    let rho0 = localized_state(m, initial_site).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("gamma_ps1", gamma)?;
    out.set_item("method", method.to_string())?;
    match method {
        EfficiencyMethod::Direct => {
            let eta = efficiency_direct(m, gamma, &rho0).map_err(to_py_err)?;
            out.set_item("eta", eta)?;
        }
        EfficiencyMethod::Integrate => {
            let r =
                efficiency_by_integration(m, gamma, &rho0, t_max, tol).map_err(to_py_err)?;
            out.set_item("eta", r.eta)?;
            out.set_item("drained", r.drained)?;
            out.set_item("t_final_ps", r.t_final_ps)?;
            out.set_item("site_population", r.site_population)?;
        }
    }
    Ok(out)
}

/// Dephasing sweep over a log-spaced grid; returns the per-point arrays
/// and the peak statistics.
#[pyfunction]
#[pyo3(signature = (model, gamma_min=1e-6, gamma_max=1e4, points=121, method="direct", horizon_ps=20.0, plateau_window_ps=2.0, plateau_tol=1e-3, initial_site=1))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    model: &Model,
    gamma_min: f64,
    gamma_max: f64,
    points: usize,
    method: &str,
    horizon_ps: f64,
    plateau_window_ps: f64,
    plateau_tol: f64,
    initial_site: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SweepConfig {
        model: model.inner.clone(),
        initial_site,
        gamma_min_ps1: gamma_min,
        gamma_max_ps1: gamma_max,
        points,
        efficiency_method: method.parse().map_err(PyValueError::new_err)?,
        trajectory_gammas_ps1: vec![],
        lqu_horizon_ps: horizon_ps,
        plateau_window_ps,
        plateau_tol,
        integration_t_max_ps: 2e4,
        integration_tol: 1e-6,
        seed: 0,
    };
    let result = run_dephasing_sweep(&cfg).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("gammas_ps1", result.gammas())?;
    out.set_item("etas", result.etas())?;
    out.set_item("phi_lqu", result.fluxes())?;
    out.set_item(
        "t_star_ps",
        result
            .points()
            .iter()
            .map(|p| p.t_star_ps)
            .collect::<Vec<_>>(),
    )?;
    out.set_item(
        "plateau_found",
        result
            .points()
            .iter()
            .map(|p| p.plateau_found)
            .collect::<Vec<_>>(),
    )?;
    out.set_item(
        "errors",
        result
            .points()
            .iter()
            .map(|p| p.error.clone())
            .collect::<Vec<_>>(),
    )?;
    if let Some((g, eta)) = result.peak_eta() {
        out.set_item("peak_eta", eta)?;
        out.set_item("peak_eta_gamma_ps1", g)?;
    }
    if let Some((g, phi)) = result.peak_phi() {
        out.set_item("peak_phi_lqu", phi)?;
        out.set_item("peak_phi_gamma_ps1", g)?;
    }
    Ok(out)
}

/// LQU of a site block (rows of complex numbers). `method` is `single`
/// for the fast path on any block size or `general` for the embedded
/// qubit-qudit form on 3-site blocks.
#[pyfunction]
#[pyo3(signature = (site_block, normalize=true, method="single"))]
fn lqu<'py>(
    py: Python<'py>,
    site_block: Vec<Vec<Complex64>>,
    normalize: bool,
    method: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let block = complex_square_from_rows(site_block)?;
    let result = match method {
        "single" => lqu_single_excitation(&block, normalize).map_err(to_py_err)?,
        "general" => {
            let n = block.nrows();
            if n != 3 {
                return Err(PyValueError::new_err(format!(
                    "the general method embeds a 3-site block, got {n}x{n}"
                )));
            }
            let trace: f64 = (0..n).map(|i| block[[i, i]].re).sum();
            let normalized = if normalize {
                if trace <= enaqt::correlations::EMPTY_BLOCK_TRACE {
                    return Err(PyValueError::new_err(format!(
                        "site block trace {trace} is too small to normalize"
                    )));
                }
                block.mapv(|z| z / trace)
            } else {
                block
            };
            let embedded = embed_single_excitation(&normalized, &PartitionSpec::leading_site(3))
                .map_err(to_py_err)?;
            lqu_general(&embedded, 4).map_err(to_py_err)?
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown LQU method '{other}' (expected single or general)"
            )))
        }
    };
    let out = PyDict::new(py);
    out.set_item("value", result.value)?;
    out.set_item("lambda_max", result.lambda_max)?;
    out.set_item("w_matrix", result.w_matrix)?;
    out.set_item("method", result.method.to_string())?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "enaqt")]
fn enaqt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(lqu, m)?)?;
    m.add("HBAR_CM1_PS", enaqt::model::HBAR_CM1_PS)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
