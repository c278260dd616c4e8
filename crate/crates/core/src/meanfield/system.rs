use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;

use super::flow::{FlowFunction, Provenance, VectorField};
use super::roots::default_seeds;
use crate::error::{Error, Result};

/// Tolerance on the identity component `l_0` of an effective jump.
const TRACE_TOL: f64 = 1e-12;

type CoefficientFn = dyn Fn(&[f64]) -> [C64; 4] + Send + Sync;

/// Single-spin jump `l = l_0 𝟙 + Σ_k l_k σ^k` acting on one species, with
/// coefficients that may depend on the full mean-field state.
#[derive(Clone)]
pub struct EffectiveJump {
    pub name: String,
    pub species: usize,
    coeff: Arc<CoefficientFn>,
}

impl EffectiveJump {
    /// `coeff` maps the flattened mean-field state to `(l_0, l_1, l_2, l_3)`.
    pub fn new<F>(name: impl Into<String>, species: usize, coeff: F) -> Self
    where
        F: Fn(&[f64]) -> [C64; 4] + Send + Sync + 'static,
    {
        Self { name: name.into(), species, coeff: Arc::new(coeff) }
    }

    /// Traceless jump given by its Pauli components only.
    pub fn traceless<F>(name: impl Into<String>, species: usize, coeff: F) -> Self
    where
        F: Fn(&[f64]) -> [C64; 3] + Send + Sync + 'static,
    {
        Self::new(name, species, move |x| {
            let [a, b, c] = coeff(x);
            [C64::new(0.0, 0.0), a, b, c]
        })
    }

    pub fn coefficients(&self, x: &[f64]) -> [C64; 4] {
        (self.coeff)(x)
    }

    /// Pauli components `(l_1, l_2, l_3)`.
    pub fn vector(&self, x: &[f64]) -> [C64; 3] {
        let [_, a, b, c] = self.coefficients(x);
        [a, b, c]
    }
}

impl fmt::Debug for EffectiveJump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EffectiveJump").field("name", &self.name).field("species", &self.species).finish()
    }
}

/// `L_ij = Σ_μ conj(l_μ,i) l_μ,j` for one species.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemMatrix {
    matrix: Matrix3<C64>,
}

impl SystemMatrix {
    pub fn from_vectors<'a, I: IntoIterator<Item = &'a [C64; 3]>>(jumps: I) -> Self {
        let mut matrix = Matrix3::zeros();
        for l in jumps {
            for i in 0..3 {
                for j in 0..3 {
                    matrix[(i, j)] += l[i].conj() * l[j];
                }
            }
        }
        Self { matrix }
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.matrix
    }

    pub fn real(&self) -> Matrix3<f64> {
        self.matrix.map(|c| c.re)
    }

    pub fn imag(&self) -> Matrix3<f64> {
        self.matrix.map(|c| c.im)
    }

    pub fn trace_real(&self) -> f64 {
        (0..3).map(|i| self.matrix[(i, i)].re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.matrix - self.matrix.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().min()
    }

    /// `∂_t m^n = 2 ε^{ijn} I_ij + 2 (R_ni − R δ_ni) m^i`.
    pub fn flow(&self, m: &[f64; 3]) -> [f64; 3] {
        let (r, im, tr) = (self.real(), self.imag(), self.trace_real());
        let mut out = [0.0; 3];
        for (n, o) in out.iter_mut().enumerate() {
            let (i, j) = ((n + 1) % 3, (n + 2) % 3);
            *o = 2.0 * (im[(i, j)] - im[(j, i)]);
            for k in 0..3 {
                *o += 2.0 * r[(n, k)] * m[k];
            }
            *o -= 2.0 * tr * m[n];
        }
        out
    }
}

struct SystemMatrixFlow {
    jumps: Vec<EffectiveJump>,
    num_species: usize,
}

impl VectorField for SystemMatrixFlow {
    fn dim(&self) -> usize {
        3 * self.num_species
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for alpha in 0..self.num_species {
            let vectors: Vec<[C64; 3]> =
                self.jumps.iter().filter(|j| j.species == alpha).map(|j| j.vector(x)).collect();
            let m = [x[3 * alpha], x[3 * alpha + 1], x[3 * alpha + 2]];
            let f = SystemMatrix::from_vectors(&vectors).flow(&m);
            out[3 * alpha..3 * alpha + 3].copy_from_slice(&f);
        }
    }
}

/// Flow assembled from effective jumps through their system matrices.
/// The traceless condition is checked on the default seed grid.
pub fn flow_from_effective_jumps(jumps: Vec<EffectiveJump>, species: Vec<String>) -> Result<FlowFunction> {
    let num_species = species.len();
    for j in &jumps {
        if j.species >= num_species {
            return Err(Error::InvalidParameter(format!(
                "jump {} refers to species {} of {}",
                j.name, j.species, num_species
            )));
        }
    }
    for probe in default_seeds(num_species) {
        let x = probe.flat();
        for j in &jumps {
            let l0 = j.coefficients(&x)[0].norm();
            if l0 > TRACE_TOL {
                return Err(Error::NotTraceless(l0));
            }
        }
    }
    let field = SystemMatrixFlow { jumps, num_species };
    Ok(FlowFunction::new(Provenance::SystemMatrix, species, Arc::new(field)))
}
