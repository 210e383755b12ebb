//! Python bindings: potentials, Ansätze, reduced systems, bounces, real-time
//! evolution, the condensate model and the full configured pipeline.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ppath::coldatom::{field_bounce_check, CondensateModel};
use ppath::config::RawConfig;
use ppath::evolver::{evolve_level, thermal_trace, DecayTrace, EvolverConfig};
use ppath::instanton::{comparison_statistic, solve_bounce_field, solve_bounce_reduced, BounceProfile};
use ppath::model::{Ansatz, AnsatzVariant, ScalarPotential};
use ppath::reduction::{reduce_ansatz, DomainRule, ReducedSystem};
use ppath::run::{execute, Stage};

const TOL: f64 = 1e-10;

/// Library errors surfaced to Python: bad input becomes `ValueError`,
/// numerical failures `RuntimeError`.
struct PpathError(ppath::Error);

impl From<ppath::Error> for PpathError {
    fn from(e: ppath::Error) -> Self {
        Self(e)
    }
}

impl From<PpathError> for PyErr {
    fn from(e: PpathError) -> Self {
        match e.0 {
            err @ (ppath::Error::InvalidInput(_) | ppath::Error::Parse { .. } | ppath::Error::Validation(_)) => {
                PyValueError::new_err(err.to_string())
            }
            err => PyRuntimeError::new_err(err.to_string()),
        }
    }
}

type PyResultP<T> = Result<T, PpathError>;

/// Quartic potential `η[−φ²/2 − λφ³/3 + φ⁴/4] − V₀` with `V(φ_F) = 0`.
#[pyclass(name = "ScalarPotential", frozen, skip_from_py_object)]
struct PyScalarPotential(ScalarPotential);

#[pymethods]
impl PyScalarPotential {
    #[new]
    fn new(eta: f64, lam: f64) -> PyResultP<Self> {
        Ok(Self(ScalarPotential::new(eta, lam)?))
    }

    #[getter]
    fn phi_false(&self) -> f64 {
        self.0.phi_false
    }

    #[getter]
    fn phi_true(&self) -> f64 {
        self.0.phi_true
    }

    fn value(&self, phi: f64) -> f64 {
        self.0.value(phi)
    }

    fn deriv(&self, phi: f64) -> f64 {
        self.0.deriv(phi)
    }

    /// Field-theoretic O(d+1) bounce: `(S_E, ρ, φ)`.
    fn bounce(&self, dim: u32) -> PyResultP<(f64, Vec<f64>, Vec<f64>)> {
        let BounceProfile { s_e, rho_grid, phi, .. } = solve_bounce_field(&self.0, dim, TOL)?;
        Ok((s_e, rho_grid, phi))
    }

    fn __repr__(&self) -> String {
        format!("ScalarPotential(eta={}, lam={})", self.0.eta, self.0.lambda)
    }
}

/// One-parameter family of bubble profiles `φ_R(r)`.
#[pyclass(name = "Ansatz", frozen, skip_from_py_object)]
struct PyAnsatz(Ansatz);

#[pymethods]
impl PyAnsatz {
    /// `variant` is one of `symmetric`, `asymmetric`, `rdw`.
    #[new]
    #[pyo3(signature = (potential, sigma, dim = 2, variant = "symmetric"))]
    fn new(potential: &PyScalarPotential, sigma: f64, dim: u32, variant: &str) -> PyResultP<Self> {
        let variant: AnsatzVariant = variant.parse()?;
        Ok(Self(Ansatz::new(variant, sigma, dim, potential.0)?))
    }

    fn value(&self, big_r: f64, r: f64) -> f64 {
        self.0.value(big_r, r)
    }

    fn d_big_r(&self, big_r: f64, r: f64) -> f64 {
        self.0.d_big_r(big_r, r)
    }

    /// Tabulates `K(R)` and `U(R)` on a uniform grid of the given spacing.
    #[pyo3(signature = (spacing = 0.01))]
    fn reduce(&self, spacing: f64) -> PyResultP<PyReducedSystem> {
        let domain = DomainRule { spacing, ..Default::default() };
        Ok(PyReducedSystem(reduce_ansatz(self.0, &domain, 1e-8)?))
    }
}

/// Point particle with position-dependent mass `K(R)` in the potential `U(R)`.
#[pyclass(name = "ReducedSystem", frozen)]
struct PyReducedSystem(ReducedSystem);

#[pymethods]
impl PyReducedSystem {
    #[getter]
    fn r(&self) -> Vec<f64> {
        self.0.grid.points()
    }

    #[getter]
    fn k(&self) -> Vec<f64> {
        self.0.k_table.clone()
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.0.u_table.clone()
    }

    #[getter]
    fn k0(&self) -> f64 {
        self.0.k0
    }

    #[getter]
    fn upp0(&self) -> f64 {
        self.0.upp0
    }

    #[getter]
    fn u_max(&self) -> f64 {
        self.0.u_max
    }

    #[getter]
    fn r_umax(&self) -> f64 {
        self.0.r_umax
    }

    #[getter]
    fn turning_point(&self) -> f64 {
        self.0.turning_point
    }

    /// Reduced Euclidean action `2∫₀^{R_*}√(2KU) dR`.
    fn bounce_action(&self) -> PyResultP<f64> {
        Ok(solve_bounce_reduced(&self.0, TOL)?.s_e_reduced)
    }

    /// Real-time decay from harmonic level `level`, or from the thermal
    /// ensemble when `temperature` is given.
    #[pyo3(signature = (t_final = 40.0, dt = 1e-3, gamma = 5e-8, r0_scale = None, level = 0, temperature = None))]
    fn evolve(
        &self,
        t_final: f64,
        dt: f64,
        gamma: f64,
        r0_scale: Option<f64>,
        level: usize,
        temperature: Option<f64>,
    ) -> PyResultP<PyDecayTrace> {
        let cfg = EvolverConfig {
            dt,
            gamma,
            t_final,
            r0_scale: r0_scale.unwrap_or(self.0.turning_point),
            stop_below: None,
            ..Default::default()
        };
        let trace = match temperature {
            Some(t) if t > 0.0 => thermal_trace(&self.0, &cfg, t, None)?,
            _ => evolve_level(&self.0, level, &cfg)?,
        };
        Ok(PyDecayTrace(trace))
    }
}

/// Survival probability `P_F(t)` and instantaneous rate `Γ(t)`.
#[pyclass(name = "DecayTrace", frozen)]
struct PyDecayTrace(DecayTrace);

#[pymethods]
impl PyDecayTrace {
    #[getter]
    fn t(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn p_false(&self) -> Vec<f64> {
        self.0.p_false.clone()
    }

    #[getter]
    fn gamma(&self) -> Vec<f64> {
        self.0.gamma_inst.clone()
    }

    /// Late-time mean of `Γ`, or `None` for runs too short to average.
    #[getter]
    fn plateau(&self) -> Option<f64> {
        self.0.metadata.plateau.map(|p| p.value)
    }
}

/// Two-component condensate with Rabi coupling; `winding` is the vortex charge.
#[pyclass(name = "CondensateModel", frozen, skip_from_py_object)]
struct PyCondensateModel(CondensateModel);

#[pymethods]
impl PyCondensateModel {
    #[new]
    #[pyo3(signature = (g0, lam, eta, rho_m = 1.0, winding = 0, sigma = 2.0))]
    fn new(g0: f64, lam: f64, eta: f64, rho_m: f64, winding: u32, sigma: f64) -> PyResultP<Self> {
        Ok(Self(CondensateModel::new(g0, lam, eta, rho_m, winding, sigma)?))
    }

    #[getter]
    fn rho_false(&self) -> f64 {
        self.0.rho_false()
    }

    #[getter]
    fn rho_true(&self) -> f64 {
        self.0.rho_true()
    }

    /// Euclidean action of the relaxed-density field bounce.
    fn field_action(&self) -> PyResultP<f64> {
        Ok(field_bounce_check(&self.0, TOL)?.s_e)
    }
}

/// `−ln(Γ/U_max) − (S_E − ½ ln(S_E/2π))`.
#[pyfunction]
fn statistic(gamma: f64, u_max: f64, s_e: f64) -> PyResultP<f64> {
    Ok(comparison_statistic(gamma, u_max, s_e)?)
}

/// Runs the configured pipeline (`stage` = `reduce`, `instanton` or `evolve`)
/// with `key=value` overrides and returns the run summary as a JSON string.
#[pyfunction]
#[pyo3(signature = (overrides, stage = "evolve"))]
fn run(py: Python<'_>, overrides: Vec<String>, stage: &str) -> PyResult<String> {
    let stage = match stage {
        "reduce" => Stage::Reduce,
        "instanton" => Stage::Instanton,
        "evolve" => Stage::Evolve,
        other => return Err(PyValueError::new_err(format!("unknown stage {other:?}"))),
    };
    let mut raw = RawConfig::default();
    for spec in &overrides {
        raw.apply_override(spec).map_err(PpathError)?;
    }
    let cfg = raw.resolve().map_err(PpathError)?;
    let (result, error) = py.detach(|| execute(&cfg, stage, "python"));
    if let Some(e) = error {
        return Err(PpathError(e).into());
    }
    serde_json::to_string(&result.summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule(name = "ppath")]
fn ppath_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyScalarPotential>()?;
    m.add_class::<PyAnsatz>()?;
    m.add_class::<PyReducedSystem>()?;
    m.add_class::<PyDecayTrace>()?;
    m.add_class::<PyCondensateModel>()?;
    m.add_function(wrap_pyfunction!(statistic, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
