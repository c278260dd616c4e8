//! Dissipative transverse-field Ising model.
//!
//! Two competing baths act on every site `s` of a periodic hypercubic
//! lattice with coordination `q = 2D`:
//!
//! * paramagnetic `P_s = (√κ/2) σ^z_s (𝟙 − σ^x_s)`, whose only dark state
//!   is `|+⟩` on every site;
//! * ferromagnetic `F_s = σ^x_s (𝟙 − (1/q) Σ_{t∈s} σ^z_t σ^z_s)`, which
//!   flips spins with antiparallel neighbours and leaves the two fully
//!   polarized states dark.
//!
//! The IF factor of `P_s` is the projector `(𝟙 − σ^x)/2`; with this
//! normalisation the exact trace, the effective single-spin jumps and the
//! closed-form flow below all coincide, and `κ_c = 4(1 − 1/q)`.
//!
//! Mean field is only qualitatively meaningful in low dimension (`q = 2`
//! in particular); the module computes it for any even `q ≥ 2`.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::meanfield::{
    find_fixed_points, flow_from_effective_jumps, reduce_dissipator, EffectiveJump, FlowFunction,
    MeanFieldState, Provenance, RootOptions, Species, VectorField,
};
use crate::operators::{identity, x, z, Cell, CellKind, JumpFamily, OperatorSum};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimParameters {
    pub kappa: f64,
    pub q: usize,
}

impl TimParameters {
    pub fn new(kappa: f64, q: usize) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        if q < 2 || q % 2 != 0 {
            return Err(Error::InvalidParameter(format!("q must be an even integer >= 2, got {q}")));
        }
        Ok(Self { kappa, q })
    }

    pub fn on_lattice(kappa: f64, lattice: &Lattice) -> Result<Self> {
        Self::new(kappa, lattice.bulk_coordination())
    }

    fn qf(&self) -> f64 {
        self.q as f64
    }
}

pub fn tim_critical_coupling(q: usize) -> f64 {
    assert!(q >= 2, "coordination number must be at least 2");
    4.0 * (1.0 - 1.0 / q as f64)
}

/// The `{P_s}` and `{F_s}` families, in that order.
pub fn tim_jumps(lattice: &Lattice, kappa: f64) -> Result<[JumpFamily; 2]> {
    if !lattice.is_fully_periodic() {
        return Err(Error::Lattice("the TIM baths are defined on fully periodic lattices".into()));
    }
    let params = TimParameters::on_lattice(kappa, lattice)?;
    let (mut para, mut ferro) = (Vec::new(), Vec::new());
    for s in 0..lattice.num_sites() {
        let cs = Cell::Site(s);
        para.push((cs, paramagnetic_jump(cs, params.kappa)));
        let mut neighbours = OperatorSum::zero();
        for t in lattice.neighbours(s) {
            neighbours = neighbours + &z(Cell::Site(t)) * &z(cs);
        }
        let iff = identity() - neighbours.scale_real(1.0 / params.qf());
        ferro.push((cs, &x(cs) * &iff));
    }
    Ok([JumpFamily::new("paramagnetic", para), JumpFamily::new("ferromagnetic", ferro)])
}

fn paramagnetic_jump(cell: Cell, kappa: f64) -> OperatorSum {
    (&z(cell) * &(identity() - x(cell))).scale_real(kappa.sqrt() / 2.0)
}

/// Effective single-spin jumps `f_0 … f_3` of the mean-field reduction.
pub fn tim_effective_jumps(params: TimParameters) -> Vec<EffectiveJump> {
    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }
    let inv_sqrt_q = 1.0 / params.qf().sqrt();
    let half_sqrt_kappa = params.kappa.sqrt() / 2.0;
    vec![
        EffectiveJump::traceless("f0", 0, move |_| {
            [c(0.0, 0.0), c(0.0, -half_sqrt_kappa), c(half_sqrt_kappa, 0.0)]
        }),
        EffectiveJump::traceless("f1", 0, |m| [c(1.0, 0.0), c(0.0, m[2]), c(0.0, 0.0)]),
        EffectiveJump::traceless("f2", 0, move |m| {
            let w = (1.0 - m[2] * m[2]).max(0.0).sqrt();
            [c(0.0, 0.0), c(inv_sqrt_q * w, 0.0), c(0.0, 0.0)]
        }),
        EffectiveJump::traceless("f3", 0, move |_| [c(0.0, 0.0), c(0.0, 0.0), c(inv_sqrt_q, 0.0)]),
    ]
}

fn species() -> Vec<String> {
    vec!["spin".to_string()]
}

pub fn tim_system_matrix_flow(params: TimParameters) -> Result<FlowFunction> {
    flow_from_effective_jumps(tim_effective_jumps(params), species())
}

/// Factorized-trace flow of the exact baths on `lattice`.
pub fn tim_trace_flow(lattice: &Lattice, kappa: f64) -> Result<FlowFunction> {
    let families = tim_jumps(lattice, kappa)?;
    reduce_dissipator(&families, lattice, &[Species::new("spin", CellKind::Site)], &[Cell::Site(0)])
}

pub fn tim_analytic_flow(params: TimParameters) -> FlowFunction {
    FlowFunction::new(Provenance::AnalyticClosedForm, species(), Arc::new(TimAnalyticFlow { params }))
}

/// Closed-form mean-field flow with its triangular Jacobian.
#[derive(Clone, Copy, Debug)]
pub struct TimAnalyticFlow {
    pub params: TimParameters,
}

impl TimAnalyticFlow {
    pub fn flow(&self, m: &[f64; 3]) -> [f64; 3] {
        let (k, q) = (self.params.kappa, self.params.qf());
        let a = 1.0 - 1.0 / q;
        [
            -m[0] * (2.0 * (a * m[2] * m[2] + 2.0 / q) + k) + k,
            -m[1] * (2.0 * (1.0 + 1.0 / q) + k / 2.0),
            2.0 * a * m[2] * (1.0 - m[2] * m[2]) - m[2] * k / 2.0,
        ]
    }

    pub fn jacobian(&self, m: &[f64; 3]) -> Matrix3<f64> {
        let (k, q) = (self.params.kappa, self.params.qf());
        let a = 1.0 - 1.0 / q;
        Matrix3::new(
            -2.0 * (a * m[2] * m[2] + 2.0 / q) - k,
            0.0,
            -4.0 * m[0] * m[2] * a,
            0.0,
            -2.0 * (1.0 + 1.0 / q) - k / 2.0,
            0.0,
            0.0,
            0.0,
            -2.0 * a * (3.0 * m[2] * m[2] - 1.0) - k / 2.0,
        )
    }
}

impl VectorField for TimAnalyticFlow {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.flow(&[x[0], x[1], x[2]]));
    }

    fn exact_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let j = self.jacobian(&[x[0], x[1], x[2]]);
        Some(DMatrix::from_iterator(3, 3, j.iter().copied()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimAnalyticReport {
    pub flow: [f64; 3],
    pub jacobian: [[f64; 3]; 3],
    pub paramagnet: [f64; 3],
    /// `m̂_F1` (negative `m_z`) and `m̂_F2`; `None` above `κ_c`, where they
    /// are complex.
    pub ferromagnets: Option<[[f64; 3]; 2]>,
    pub kappa_c: f64,
    pub lambda_p: f64,
    pub lambda_f: f64,
}

pub fn tim_paramagnet(params: TimParameters) -> [f64; 3] {
    let (k, q) = (params.kappa, params.qf());
    [k * q / (k * q + 4.0), 0.0, 0.0]
}

pub fn tim_ferromagnets(params: TimParameters) -> Option<[[f64; 3]; 2]> {
    let (k, q) = (params.kappa, params.qf());
    let disc = 4.0 - k * q / (q - 1.0);
    if disc < 0.0 {
        return None;
    }
    let mx = 2.0 * k * q / ((k + 4.0) * q + 4.0);
    let mz = 0.5 * disc.sqrt();
    Some([[mx, 0.0, -mz], [mx, 0.0, mz]])
}

pub fn tim_analytic(params: TimParameters, m: [f64; 3]) -> Result<TimAnalyticReport> {
    let norm = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    if norm > 1.0 {
        return Err(Error::OutsideBlochBall(norm));
    }
    let flow = TimAnalyticFlow { params };
    let j = flow.jacobian(&m);
    let (k, q) = (params.kappa, params.qf());
    Ok(TimAnalyticReport {
        flow: flow.flow(&m),
        jacobian: std::array::from_fn(|r| std::array::from_fn(|c| j[(r, c)])),
        paramagnet: tim_paramagnet(params),
        ferromagnets: tim_ferromagnets(params),
        kappa_c: tim_critical_coupling(params.q),
        lambda_p: 2.0 - 0.5 * (k + 4.0 / q),
        lambda_f: k - 4.0 * (1.0 - 1.0 / q),
    })
}

/// Number of distinct fixed points of the analytic flow found from the
/// default seeds.
pub fn tim_branch_count(params: TimParameters, opts: &RootOptions) -> usize {
    let flow = tim_analytic_flow(params);
    find_fixed_points(&flow, &crate::meanfield::default_seeds(1), opts).roots.len()
}

/// Bisection on `κ ∈ [lo, hi]` for the change of the branch count from 3
/// (below) to 1 (above), down to a bracket of width `tol`.
pub fn locate_bifurcation(q: usize, lo: f64, hi: f64, tol: f64, opts: &RootOptions) -> Result<(f64, f64)> {
    let count = |k: f64| -> Result<usize> { Ok(tim_branch_count(TimParameters::new(k, q)?, opts)) };
    let (mut a, mut b) = (lo, hi);
    if count(a)? != 3 || count(b)? != 1 {
        return Err(Error::InvalidParameter(format!("[{lo}, {hi}] does not bracket the bifurcation")));
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        match count(mid)? {
            3 => a = mid,
            1 => b = mid,
            n => return Err(Error::Numerical(format!("unexpected branch count {n} at kappa = {mid}"))),
        }
    }
    Ok((a, b))
}

/// The state reached from `m` by `U = Π_s σ^x_s`: operators are conjugated
/// term by term, `σ^y` and `σ^z` change sign.
pub fn global_flip(op: &OperatorSum) -> OperatorSum {
    op.map_strings(|s| {
        let odd = s.factors().iter().filter(|(c, p)| matches!(c, Cell::Site(_)) && *p != crate::operators::Pauli::X).count() % 2;
        (C64::new(if odd == 1 { -1.0 } else { 1.0 }, 0.0), s.clone())
    })
}

/// Default mean-field state used to start critical-relaxation runs.
pub fn perturbed_paramagnet(params: TimParameters, dz: f64) -> Result<MeanFieldState> {
    let p = tim_paramagnet(params);
    MeanFieldState::single([p[0], p[1], p[2] + dz])
}
