//! Python bindings for the `neumark` library.
//!
//! Complex amplitudes cross the boundary as Python `complex`, matrices as
//! lists of rows. Every library error is raised as `NeumarkError` with the
//! error code as the message prefix.

use neumark::ensemble::{build_product_state, load_ensemble, QubitLabel};
use neumark::numerics::ComplexMatrix;
use neumark::pipeline::StageError;
use neumark::report::PipelineReport;
use neumark::sdp::reciprocal_states;
use neumark::synthesis::simulate_measurement;
use neumark::{Error, Tolerances};
use num_complex::Complex64;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

pyo3::create_exception!(neumark_py, NeumarkError, PyException);

fn to_py(e: Error) -> PyErr {
    NeumarkError::new_err(format!("{}: {e}", e.code()))
}

fn stage_to_py(e: StageError) -> PyErr {
    NeumarkError::new_err(format!("{} [{}]: {}", e.error.code(), e.stage, e.error))
}

fn rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    m.to_rows()
}

#[pyclass(frozen, name = "Ensemble")]
pub struct PyEnsemble {
    inner: neumark::ensemble::Ensemble,
}

#[pymethods]
impl PyEnsemble {
    #[new]
    fn new(dimension: usize, states: Vec<Vec<Complex64>>, priors: Vec<f64>) -> PyResult<Self> {
        neumark::ensemble::Ensemble::new(dimension, states, priors)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Parses the JSON ensemble document used by the command-line tool.
    #[staticmethod]
    fn from_json(document: &str) -> PyResult<Self> {
        load_ensemble(document).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn states(&self) -> Vec<Vec<Complex64>> {
        self.inner.states().to_vec()
    }

    #[getter]
    fn priors(&self) -> Vec<f64> {
        self.inner.priors().to_vec()
    }

    #[getter]
    fn gram(&self) -> Vec<Vec<Complex64>> {
        rows(&self.inner.gram())
    }

    fn __repr__(&self) -> String {
        format!("Ensemble(n={}, dimension={})", self.inner.n(), self.inner.dim())
    }
}

#[pyclass(frozen, get_all, name = "UsdSolution")]
pub struct PyUsdSolution {
    p: Vec<f64>,
    total_pd: f64,
    duality_gap: f64,
    iterations: usize,
}

impl From<neumark::sdp::UsdSolution> for PyUsdSolution {
    fn from(s: neumark::sdp::UsdSolution) -> Self {
        Self {
            p: s.p,
            total_pd: s.total_pd,
            duality_gap: s.duality_gap,
            iterations: s.iterations,
        }
    }
}

#[pymethods]
impl PyUsdSolution {
    fn __repr__(&self) -> String {
        format!("UsdSolution(total_pd={:.6}, p={:?})", self.total_pd, self.p)
    }
}

#[pyclass(frozen, name = "Pipeline")]
pub struct PyPipeline {
    inner: neumark::pipeline::PipelineOutput,
}

#[pymethods]
impl PyPipeline {
    #[getter]
    fn p(&self) -> Vec<f64> {
        self.inner.solution.p.clone()
    }

    #[getter]
    fn total_pd(&self) -> f64 {
        self.inner.solution.total_pd
    }

    #[getter]
    fn ext_dim(&self) -> usize {
        self.inner.ext_dim()
    }

    /// Amplitudes `g_1 ... g_K` in order (index 0 holds `g_1`).
    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.final_config.g.clone()
    }

    #[getter]
    fn final_states(&self) -> Vec<Vec<Complex64>> {
        self.inner.final_config.states_f.clone()
    }

    #[getter]
    fn ladder(&self) -> Vec<Vec<Complex64>> {
        rows(&self.inner.ladder.coeffs)
    }

    #[getter]
    fn u0(&self) -> Vec<Vec<Complex64>> {
        rows(&self.inner.ladder.u0)
    }

    #[getter]
    fn u1(&self) -> Vec<Vec<Complex64>> {
        rows(&self.inner.synthesis.u1)
    }

    #[getter]
    fn u_total(&self) -> Vec<Vec<Complex64>> {
        rows(&self.inner.synthesis.u_total)
    }

    #[getter]
    fn synthesis_residual(&self) -> f64 {
        self.inner.synthesis.residual
    }

    #[getter]
    fn reconstruction_error(&self) -> f64 {
        self.inner.rotations.reconstruction_error
    }

    /// `(k, l, alpha, beta, gamma, delta)` per step, one-based planes,
    /// angles in degrees.
    #[getter]
    fn rotations(&self) -> Vec<(usize, usize, f64, f64, f64, f64)> {
        self.inner
            .rotations
            .steps
            .iter()
            .map(|s| {
                let a = s.angles;
                (s.k + 1, s.l + 1, a.alpha, a.beta, a.gamma, a.delta)
            })
            .collect()
    }

    /// Outcome probabilities over the extended basis for state `index`
    /// (zero-based).
    fn measurement(&self, index: usize) -> PyResult<Vec<f64>> {
        simulate_measurement(&self.inner.final_config, index).map_err(to_py)
    }

    fn report_json(&self) -> PyResult<String> {
        PipelineReport::from_output(&self.inner)
            .map(|r| r.to_json())
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Pipeline(n={}, ext_dim={}, total_pd={:.6})",
            self.inner.ensemble.n(),
            self.inner.ext_dim(),
            self.inner.solution.total_pd
        )
    }
}

#[pyfunction]
fn solve_usd(ensemble: &PyEnsemble) -> PyResult<PyUsdSolution> {
    let coeffs = neumark::ladder::ladder_coefficients(&ensemble.inner).map_err(to_py)?;
    let rec = reciprocal_states(&coeffs).map_err(to_py)?;
    neumark::sdp::solve_usd(&ensemble.inner, &rec)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn oracle_usd(py: Python<'_>, ensemble: &PyEnsemble, grid_step: f64) -> PyResult<PyUsdSolution> {
    let coeffs = neumark::ladder::ladder_coefficients(&ensemble.inner).map_err(to_py)?;
    let rec = reciprocal_states(&coeffs).map_err(to_py)?;
    py.detach(|| neumark::sdp::oracle_usd(&ensemble.inner, &rec, grid_step))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (ensemble, tol_unitary=None, tol_gram=None))]
fn run_pipeline(ensemble: &PyEnsemble, tol_unitary: Option<f64>, tol_gram: Option<f64>) -> PyResult<PyPipeline> {
    let mut tol = Tolerances::default();
    if let Some(t) = tol_unitary {
        tol.unitary = t;
    }
    if let Some(t) = tol_gram {
        tol.gram = t;
    }
    neumark::pipeline::run_pipeline(&ensemble.inner, &tol)
        .map(|inner| PyPipeline { inner })
        .map_err(stage_to_py)
}

/// Kronecker product of single-qubit labels such as `["d+", "c-"]`.
#[pyfunction]
fn product_state(labels: Vec<String>) -> PyResult<Vec<Complex64>> {
    let factors = labels
        .iter()
        .map(|l| l.parse::<QubitLabel>().map(QubitLabel::amplitudes))
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    build_product_state(&factors).map_err(to_py)
}

#[pymodule]
fn neumark_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NeumarkError", m.py().get_type::<NeumarkError>())?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyUsdSolution>()?;
    m.add_class::<PyPipeline>()?;
    m.add_function(wrap_pyfunction!(solve_usd, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_usd, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(product_state, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::PyDict;

    const BB84: &str = r#"{"dimension": 8, "priors": [0.25, 0.25, 0.25, 0.25],
        "product_states": [["d+","d+","d+"], ["d-","d-","d-"], ["c+","c+","c+"], ["c-","c-","c-"]]}"#;

    fn with_module(code: &str) {
        Python::initialize();
        Python::attach(|py| {
            let module = PyModule::new(py, "neumark_py").unwrap();
            neumark_py(&module).unwrap();
            let globals = PyDict::new(py);
            globals.set_item("nm", module).unwrap();
            globals.set_item("BB84", BB84).unwrap();
            let code = std::ffi::CString::new(code).unwrap();
            py.run(&code, Some(&globals), None).unwrap_or_else(|e| {
                panic!(
                    "{e}\n{}",
                    e.traceback(py).map(|t| t.format().unwrap()).unwrap_or_default()
                )
            });
        });
    }

    #[test]
    fn pipeline_from_python() {
        with_module(
            r#"
e = nm.Ensemble.from_json(BB84)
assert e.n == 4 and e.dimension == 8
run = nm.run_pipeline(e)
assert abs(run.total_pd - 0.5) < 1e-4
assert len(run.rotations) == 28
k, l, alpha, beta, gamma, delta = run.rotations[0]
assert (k, l) == (1, 2) and abs(alpha - 90) < 1e-6 and abs(gamma / 2 - 45) < 1e-6
probs = run.measurement(0)
assert abs(probs[0] - 0.5) < 1e-8 and max(probs[1:4]) < 1e-10
assert '"status": "OK"' in run.report_json()
"#,
        );
    }

    #[test]
    fn solver_oracle_and_product_states() {
        with_module(
            r#"
s = 0.5
e = nm.Ensemble(2, [[1, 0], [s, (1 - s * s) ** 0.5]], [0.5, 0.5])
sol = nm.solve_usd(e)
assert all(abs(p - 0.5) < 1e-5 for p in sol.p)
grid = nm.oracle_usd(e, 1e-3)
assert abs(grid.total_pd - sol.total_pd) <= 2e-3
v = nm.product_state(["d+", "c-"])
assert len(v) == 4 and abs(sum(abs(z) ** 2 for z in v) - 1) < 1e-12
"#,
        );
    }

    #[test]
    fn errors_become_neumark_error() {
        with_module(
            r#"
try:
    nm.Ensemble(2, [[1, 0], [1, 0]], [0.5, 0.5])
except nm.NeumarkError as err:
    assert "LinearlyDependent" in str(err)
else:
    raise AssertionError("expected NeumarkError")
try:
    nm.oracle_usd(nm.Ensemble.from_json(BB84), 0.1)
except nm.NeumarkError as err:
    assert "OracleTooLarge" in str(err)
else:
    raise AssertionError("expected NeumarkError")
"#,
        );
    }
}
