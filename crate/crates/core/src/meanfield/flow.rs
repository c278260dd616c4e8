use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use super::state::MeanFieldState;

/// A vector field on the flattened state `(m_0^x, m_0^y, m_0^z, m_1^x, ...)`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Exact derivative, when the construction knows it.
    fn exact_jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    AnalyticClosedForm,
    SystemMatrix,
    FactorizedTrace,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::AnalyticClosedForm => "analytic-closed-form",
            Provenance::SystemMatrix => "system-matrix",
            Provenance::FactorizedTrace => "factorized-trace",
        })
    }
}

/// Finite-difference step used when no exact Jacobian is available.
const DEFAULT_STEP: f64 = 1e-6;

#[derive(Clone)]
pub struct FlowFunction {
    provenance: Provenance,
    species: Vec<String>,
    field: Arc<dyn VectorField>,
}

impl FlowFunction {
    pub fn new(provenance: Provenance, species: Vec<String>, field: Arc<dyn VectorField>) -> Self {
        assert_eq!(field.dim(), 3 * species.len(), "flow dimension must be 3 per species");
        Self { provenance, species, field }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn eval(&self, m: &MeanFieldState) -> Vec<f64> {
        self.eval_flat(&m.flat())
    }

    pub fn eval_flat(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.field.eval(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.field.eval(x, out);
    }

    pub fn exact_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        self.field.exact_jacobian(x)
    }

    /// Exact Jacobian if available, central differences otherwise.
    pub fn jacobian_at(&self, x: &[f64]) -> DMatrix<f64> {
        self.exact_jacobian(x).unwrap_or_else(|| central_difference(self, x, DEFAULT_STEP))
    }
}

impl fmt::Debug for FlowFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowFunction")
            .field("provenance", &self.provenance)
            .field("species", &self.species)
            .finish()
    }
}

/// Central finite-difference Jacobian, `J[(α,n),(β,k)] = ∂F_(α,n)/∂m_β^k`.
pub fn jacobian(flow: &FlowFunction, m: &MeanFieldState, step: f64) -> DMatrix<f64> {
    assert!(step > 0.0, "finite-difference step must be positive");
    central_difference(flow, &m.flat(), step)
}

fn central_difference(flow: &FlowFunction, x: &[f64], step: f64) -> DMatrix<f64> {
    let n = flow.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = x.to_vec();
    let (mut plus, mut minus) = (vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        probe[k] = x[k] + step;
        flow.eval_into(&probe, &mut plus);
        probe[k] = x[k] - step;
        flow.eval_into(&probe, &mut minus);
        probe[k] = x[k];
        for r in 0..n {
            jac[(r, k)] = (plus[r] - minus[r]) / (2.0 * step);
        }
    }
    jac
}
