//! Python bindings for `aorc-core`.

use aorc_core::asymptotics::{level_function_g, limiting_fdr_of_procedure, solve_r_star};
use aorc_core::montecarlo::{DEFAULT_MU, DEFAULT_RHO};
use aorc_core::{
    AdjustedKind, Alpha, AsymptoticModel, DataModel, DuConfig, PValueSample, ProcedureKind, RejectionCurveSpec,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: aorc_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn alpha(a: f64) -> PyResult<Alpha> {
    Alpha::new(a).map_err(err)
}

fn kind(kind: &str, lam: Option<f64>) -> PyResult<ProcedureKind> {
    match (kind, lam) {
        ("su", None) => Ok(ProcedureKind::StepUp),
        ("sd", None) => Ok(ProcedureKind::StepDown),
        ("sud", Some(l)) => ProcedureKind::step_up_down(l).map_err(err),
        ("sud", None) => Err(PyValueError::new_err("kind 'sud' needs lam")),
        _ => Err(PyValueError::new_err(format!("unknown procedure {kind:?} (lam only applies to 'sud')"))),
    }
}

/// A rejection curve together with its level α.
#[pyclass(name = "Curve", frozen)]
struct PyCurve {
    spec: RejectionCurveSpec,
}

fn adjusted(kind: AdjustedKind, a: f64, kappa: Option<f64>, xstar: Option<f64>) -> PyResult<PyCurve> {
    let a = alpha(a)?;
    let spec = match (kappa, xstar) {
        (Some(k), None) => RejectionCurveSpec::adjusted(kind, a, k),
        (None, Some(x)) => RejectionCurveSpec::adjusted_with_xstar(kind, a, x),
        _ => return Err(PyValueError::new_err("give exactly one of kappa or xstar")),
    };
    Ok(PyCurve { spec: spec.map_err(err)? })
}

#[pymethods]
impl PyCurve {
    #[staticmethod]
    fn simes(alpha_: f64) -> PyResult<Self> {
        Ok(PyCurve { spec: RejectionCurveSpec::simes(alpha(alpha_)?) })
    }

    #[staticmethod]
    fn aorc(alpha_: f64) -> PyResult<Self> {
        Ok(PyCurve { spec: RejectionCurveSpec::aorc(alpha(alpha_)?) })
    }

    #[staticmethod]
    #[pyo3(signature = (alpha_, kappa=None, xstar=None))]
    fn adjusted_h1(alpha_: f64, kappa: Option<f64>, xstar: Option<f64>) -> PyResult<Self> {
        adjusted(AdjustedKind::H1, alpha_, kappa, xstar)
    }

    #[staticmethod]
    #[pyo3(signature = (alpha_, kappa=None, xstar=None))]
    fn adjusted_h2(alpha_: f64, kappa: Option<f64>, xstar: Option<f64>) -> PyResult<Self> {
        adjusted(AdjustedKind::H2, alpha_, kappa, xstar)
    }

    #[staticmethod]
    fn truncated(alpha_: f64, kappa: f64) -> PyResult<Self> {
        Ok(PyCurve { spec: RejectionCurveSpec::truncated(alpha(alpha_)?, kappa).map_err(err)? })
    }

    #[staticmethod]
    fn beta_adjusted(alpha_: f64, beta: f64, n: usize) -> PyResult<Self> {
        Ok(PyCurve { spec: RejectionCurveSpec::beta_adjusted(alpha(alpha_)?, beta, n).map_err(err)? })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.spec.alpha.value()
    }

    fn rho(&self, x: f64) -> PyResult<f64> {
        self.spec.rho(x).map_err(err)
    }

    fn rejection_curve(&self, t: f64) -> PyResult<f64> {
        self.spec.rejection_curve(t).map_err(err)
    }

    fn q(&self, x: f64) -> PyResult<f64> {
        self.spec.q(x).map_err(err)
    }

    fn critical_values(&self, n: usize) -> PyResult<Vec<f64>> {
        Ok(self.spec.critical_values(n).map_err(err)?.values().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Curve({:?}, alpha={})", self.spec.curve, self.spec.alpha.value())
    }
}

/// Applies a stepwise procedure; returns a dict with `rejected`, `R`, `threshold`, `m_index`.
#[pyfunction]
#[pyo3(signature = (pvalues, curve, kind="su", lam=None))]
fn decide<'py>(
    py: Python<'py>,
    pvalues: Vec<f64>,
    curve: &PyCurve,
    kind: &str,
    lam: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let sample = PValueSample::new(pvalues).map_err(err)?;
    let c = curve.spec.critical_values(sample.len()).map_err(err)?;
    let d = aorc_core::decide(&sample, &c, self::kind(kind, lam)?).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("rejected", d.rejected)?;
    out.set_item("R", d.rejections)?;
    out.set_item("threshold", d.threshold)?;
    out.set_item("m_index", d.m_index)?;
    Ok(out)
}

/// Exact step-up FDR with `n0` true nulls at p = U(0,1) and the rest at 0.
#[pyfunction]
fn exact_fdr(curve: &PyCurve, n: usize, n0: usize) -> PyResult<f64> {
    let c = curve.spec.critical_values(n).map_err(err)?;
    aorc_core::exact_du_fdr_su(&c, DuConfig::new(n, n0).map_err(err)?).map_err(err)
}

/// `P(R = k)` for `k = 0..=n` under the same configuration.
#[pyfunction]
fn rejection_pmf(curve: &PyCurve, n: usize, n0: usize) -> PyResult<Vec<f64>> {
    let c = curve.spec.critical_values(n).map_err(err)?;
    Ok(aorc_core::su_rejection_pmf(&c, DuConfig::new(n, n0).map_err(err)?).map_err(err)?.probs)
}

/// Exact FDR for every `n0`; returns `(worst_n0, max_fdr, table)`.
#[pyfunction]
fn worst_case_scan(curve: &PyCurve, n: usize) -> PyResult<(usize, f64, Vec<f64>)> {
    let w = aorc_core::worst_case_scan(&curve.spec, n).map_err(err)?;
    Ok((w.worst_n0, w.max_fdr, w.table.into_iter().map(|(_, f)| f).collect()))
}

#[pyfunction]
#[pyo3(signature = (n, alpha_=0.05, tol=1e-3))]
fn calibrate_beta<'py>(py: Python<'py>, n: usize, alpha_: f64, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = aorc_core::calibrate_beta(n, alpha(alpha_)?, tol).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("beta_star", r.beta_star)?;
    out.set_item("worst_n0", r.worst_n0)?;
    out.set_item("achieved_max_fdr", r.achieved_max_fdr)?;
    out.set_item("trace", r.trace)?;
    Ok(out)
}

/// Monte Carlo FDR and power; `model` is one of `du`, `shift`, `equicorr`.
#[pyfunction]
#[pyo3(signature = (curve, n, n0, reps, seed, model="du", kind="su", lam=None, mu=DEFAULT_MU, rho=DEFAULT_RHO))]
#[allow(clippy::too_many_arguments)]
fn estimate<'py>(
    py: Python<'py>,
    curve: &PyCurve,
    n: usize,
    n0: usize,
    reps: usize,
    seed: u64,
    model: &str,
    kind: &str,
    lam: Option<f64>,
    mu: f64,
    rho: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let model = match model {
        "du" => DataModel::DiracUniform { n0 },
        "shift" => DataModel::NormalShift { n0, mu },
        "equicorr" => DataModel::Equicorrelated { n0, mu, rho },
        other => return Err(PyValueError::new_err(format!("unknown model {other:?}"))),
    };
    let k = self::kind(kind, lam)?;
    let e = py.detach(|| aorc_core::estimate(&model, &curve.spec, k, n, reps, seed)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("mean_fdp", e.mean_fdp)?;
    out.set_item("se_fdp", e.se_fdp)?;
    out.set_item("mean_power", e.mean_power)?;
    out.set_item("se_power", e.se_power)?;
    out.set_item("reps", e.reps)?;
    Ok(out)
}

/// Dirac-uniform limit at null proportion `zeta`: `(t_zeta, r_star, limiting_fdr, g)`.
#[pyfunction]
fn asymptotics(curve: &PyCurve, zeta: f64) -> PyResult<(f64, f64, f64, Option<f64>)> {
    let m = AsymptoticModel::new(zeta, curve.spec.alpha).map_err(err)?;
    let g = level_function_g(&curve.spec, zeta).ok();
    Ok((m.t_zeta(), solve_r_star(&curve.spec, &m), limiting_fdr_of_procedure(&curve.spec, &m), g))
}

#[pymodule]
fn aorc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    m.add_function(wrap_pyfunction!(exact_fdr, m)?)?;
    m.add_function(wrap_pyfunction!(rejection_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_scan, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_beta, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotics, m)?)?;
    Ok(())
}
