//! Quantum-trajectory Monte Carlo and exact steady states for purely
//! dissipative dynamics on small lattices.
//!
//! Trajectories follow the waiting-time unraveling: between jumps the
//! unnormalized state obeys `dψ/dt = −½ K ψ` with `K = Σ_i L_i†L_i`, a jump
//! fires when `‖ψ‖²` drops below a uniform random threshold, and the
//! channel is drawn with weight `‖L_i ψ‖²`. The no-jump evolution is
//! integrated with RK4 in steps capped so that `Δt ⟨K⟩ ≤ p_cap`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lattice::Lattice;
use crate::operators::{x, z, Cell, CompiledOperator, JumpFamily, OperatorSum, StateVector};

pub const MAX_TRAJECTORY_CELLS: usize = 14;
pub const MAX_EXACT_CELLS: usize = 8;
/// Systems up to this size use the dense superoperator in [`exact_ness`].
pub const DENSE_EXACT_CELLS: usize = 5;

const ZERO: C64 = C64::new(0.0, 0.0);
const NORM_TOL: f64 = 1e-10;
const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-10;

/// A named Hermitian observable recorded along trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub name: String,
    pub op: OperatorSum,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: OperatorSum) -> Self {
        Self { name: name.into(), op }
    }
}

/// `mean_sz = (1/N) Σ_s σ^z_s`, `mean_sx` likewise, and `nn_zz`, the
/// average of `σ^z σ^z` over the edges of the lattice.
pub fn spin_observables(lattice: &Lattice) -> Vec<Observable> {
    let n = lattice.num_sites() as f64;
    let sum = |f: fn(Cell) -> OperatorSum| {
        (0..lattice.num_sites()).fold(OperatorSum::zero(), |acc, s| &acc + &f(Cell::Site(s))).scale_real(1.0 / n)
    };
    let zz = (0..lattice.num_edges())
        .fold(OperatorSum::zero(), |acc, e| {
            let [a, b] = lattice.sites_of_edge(e);
            &acc + &(&z(Cell::Site(a)) * &z(Cell::Site(b)))
        })
        .scale_real(1.0 / lattice.num_edges().max(1) as f64);
    vec![Observable::new("mean_sz", sum(z)), Observable::new("mean_sx", sum(x)), Observable::new("nn_zz", zz)]
}

pub fn site_cells(lattice: &Lattice) -> Vec<Cell> {
    (0..lattice.num_sites()).map(Cell::Site).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryOptions {
    /// Upper bound on the jump probability `Δt ⟨K⟩` of one step.
    pub p_cap: f64,
    /// Spacing of the observable time grid.
    pub sample_dt: f64,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self { p_cap: 0.05, sample_dt: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JumpEvent {
    pub time: f64,
    /// Index into [`TrajectoryRecord::families`].
    pub family: usize,
    pub cell: Cell,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub stream: u64,
    pub families: Vec<String>,
    pub times: Vec<f64>,
    pub events: Vec<JumpEvent>,
    pub observables: BTreeMap<String, Vec<f64>>,
    pub steps: usize,
    /// Largest `|‖ψ‖ − 1|` seen after renormalization.
    pub max_norm_drift: f64,
    pub final_norm: f64,
    pub final_expectations: BTreeMap<String, f64>,
}

impl TrajectoryRecord {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.observables.get(name).map(Vec::as_slice)
    }

    pub fn events_of(&self, family: usize) -> impl Iterator<Item = &JumpEvent> {
        self.events.iter().filter(move |e| e.family == family)
    }
}

struct Channel {
    family: usize,
    cell: Cell,
    op: CompiledOperator,
}

/// Jump operators, the no-jump generator and observables compiled against
/// one cell ordering; shared by all trajectories of an ensemble.
pub struct Unraveling {
    cells: Vec<Cell>,
    families: Vec<String>,
    channels: Vec<Channel>,
    decay: CompiledOperator,
    observables: Vec<(String, CompiledOperator)>,
}

fn decay_operator<'a, I: IntoIterator<Item = &'a OperatorSum>>(ops: I) -> OperatorSum {
    ops.into_iter().fold(OperatorSum::zero(), |acc, l| &acc + &(&l.adjoint() * l))
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

fn check_normalized(psi: &StateVector) -> Result<()> {
    let n = psi.norm();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

impl Unraveling {
    pub fn new(families: &[JumpFamily], cells: &[Cell], observables: &[Observable]) -> Result<Self> {
        if cells.len() > MAX_TRAJECTORY_CELLS {
            return Err(Error::TooLarge { cells: cells.len(), limit: MAX_TRAJECTORY_CELLS });
        }
        let mut channels = Vec::new();
        for (f, fam) in families.iter().enumerate() {
            for (cell, op) in &fam.operators {
                channels.push(Channel { family: f, cell: *cell, op: CompiledOperator::new(op, cells)? });
            }
        }
        let decay = CompiledOperator::new(&decay_operator(families.iter().flat_map(|f| f.iter())), cells)?;
        let observables = observables
            .iter()
            .map(|o| Ok((o.name.clone(), CompiledOperator::new(&o.op, cells)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cells: cells.to_vec(), families: families.iter().map(|f| f.name.clone()).collect(), channels, decay, observables })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    fn rate(&self, psi: &[C64]) -> f64 {
        self.decay.expectation(psi).re.max(0.0)
    }

    /// One RK4 step of `dφ/dt = −½ K φ` from `psi` over `h`.
    fn no_jump_step(&self, psi: &[C64], h: f64) -> Vec<C64> {
        let f = |v: &[C64]| {
            let mut out = vec![ZERO; v.len()];
            self.decay.apply_add(v, C64::new(-0.5, 0.0), &mut out);
            out
        };
        let shifted = |k: &[C64], s: f64| -> Vec<C64> { psi.iter().zip(k).map(|(a, b)| a + b * s).collect() };
        let k1 = f(psi);
        let k2 = f(&shifted(&k1, 0.5 * h));
        let k3 = f(&shifted(&k2, 0.5 * h));
        let k4 = f(&shifted(&k3, h));
        psi.iter()
            .enumerate()
            .map(|(i, a)| a + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0))
            .collect()
    }

    fn record(&self, psi: &[C64], series: &mut [Vec<f64>]) {
        for ((_, op), s) in self.observables.iter().zip(series.iter_mut()) {
            s.push(op.expectation(psi).re);
        }
    }

    /// One trajectory from `psi0` to `t_max`. The random stream is ChaCha8
    /// seeded with `seed` on stream `stream`, so `(seed, stream)` fixes the
    /// record bit for bit.
    pub fn run(
        &self,
        psi0: &StateVector,
        t_max: f64,
        seed: u64,
        stream: u64,
        opts: &TrajectoryOptions,
    ) -> Result<TrajectoryRecord> {
        check_normalized(psi0)?;
        if psi0.cells() != self.cells.as_slice() {
            return Err(Error::InvalidParameter("initial state uses a different cell ordering".into()));
        }
        if !(opts.p_cap > 0.0 && opts.p_cap <= 0.1) {
            return Err(Error::InvalidParameter(format!("p_cap must lie in (0, 0.1], got {}", opts.p_cap)));
        }
        if !(t_max > 0.0 && t_max.is_finite() && opts.sample_dt > 0.0) {
            return Err(Error::InvalidParameter("t_max and sample_dt must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let threshold = |rng: &mut ChaCha8Rng| loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u.ln();
            }
        };

        let samples = (t_max / opts.sample_dt - 1e-9).ceil() as usize;
        let times: Vec<f64> = (0..=samples).map(|k| (k as f64 * opts.sample_dt).min(t_max)).collect();
        let mut series = vec![Vec::with_capacity(times.len()); self.observables.len()];
        let mut psi = psi0.amps().to_vec();
        self.record(&psi, &mut series);

        let mut events = Vec::new();
        let (mut t, mut steps, mut drift) = (0.0, 0usize, 0.0f64);
        let mut log_survival = 0.0;
        let mut target = threshold(&mut rng);
        let mut weights = vec![0.0; self.channels.len()];
        let mut scratch = vec![ZERO; psi.len()];
        for &next in &times[1..] {
            while t < next {
                steps += 1;
                let gamma = self.rate(&psi);
                let h = if gamma > 0.0 { (opts.p_cap / gamma).min(next - t) } else { next - t };
                let phi = self.no_jump_step(&psi, h);
                let n2 = norm_sqr(&phi);
                if log_survival + n2.ln() > target {
                    log_survival += n2.ln();
                    psi = phi;
                    t = if h == next - t { next } else { t + h };
                } else {
                    // the threshold is crossed inside this step
                    let (mut lo, mut hi) = (0.0, h);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if log_survival + norm_sqr(&self.no_jump_step(&psi, mid)).ln() > target {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if hi - lo <= 1e-13 * (1.0 + t) {
                            break;
                        }
                    }
                    psi = self.no_jump_step(&psi, hi);
                    t = (t + hi).min(next);
                    let n = norm_sqr(&psi).sqrt();
                    psi.iter_mut().for_each(|a| *a /= n);

                    let mut total = 0.0;
                    for (w, ch) in weights.iter_mut().zip(&self.channels) {
                        ch.op.apply(&psi, &mut scratch);
                        *w = norm_sqr(&scratch);
                        total += *w;
                    }
                    if total <= 0.0 {
                        return Err(Error::Numerical(format!("jump threshold crossed with zero jump rate at t = {t}")));
                    }
                    let mut pick: f64 = rng.random::<f64>() * total;
                    let mut k = weights.len() - 1;
                    for (i, w) in weights.iter().enumerate() {
                        if pick < *w {
                            k = i;
                            break;
                        }
                        pick -= w;
                    }
                    let ch = &self.channels[k];
                    ch.op.apply(&psi, &mut scratch);
                    let n = weights[k].sqrt();
                    psi.iter_mut().zip(&scratch).for_each(|(a, b)| *a = b / n);
                    if events.last().is_some_and(|e: &JumpEvent| e.time >= t) {
                        t = f64::from_bits(t.to_bits() + 1);
                    }
                    events.push(JumpEvent { time: t, family: ch.family, cell: ch.cell });
                    log_survival = 0.0;
                    target = threshold(&mut rng);
                }
                let n = norm_sqr(&psi).sqrt();
                psi.iter_mut().for_each(|a| *a /= n);
                drift = drift.max((norm_sqr(&psi).sqrt() - 1.0).abs());
                if !psi.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
                    return Err(Error::Numerical(format!("non-finite amplitude at t = {t}")));
                }
            }
            self.record(&psi, &mut series);
        }

        let observables: BTreeMap<String, Vec<f64>> =
            self.observables.iter().map(|(n, _)| n.clone()).zip(series).collect();
        let final_expectations = observables.iter().map(|(k, v)| (k.clone(), *v.last().unwrap())).collect();
        Ok(TrajectoryRecord {
            seed,
            stream,
            families: self.families.clone(),
            times,
            events,
            observables,
            steps,
            max_norm_drift: drift,
            final_norm: norm_sqr(&psi).sqrt(),
            final_expectations,
        })
    }
}

/// Single trajectory; see [`Unraveling::run`].
pub fn run_trajectory(
    families: &[JumpFamily],
    observables: &[Observable],
    psi0: &StateVector,
    t_max: f64,
    seed: u64,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    Unraveling::new(families, psi0.cells(), observables)?.run(psi0, t_max, seed, 0, opts)
}

/// `count` trajectories; trajectory `k` uses stream `k` of `seed`.
pub fn run_ensemble(
    families: &[JumpFamily],
    observables: &[Observable],
    psi0: &StateVector,
    t_max: f64,
    seed: u64,
    count: usize,
    opts: &TrajectoryOptions,
    execution: Execution,
) -> Result<Vec<TrajectoryRecord>> {
    let u = Unraveling::new(families, psi0.cells(), observables)?;
    execution.map_range(count, |k| u.run(psi0, t_max, seed, k as u64, opts)).into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleEstimate {
    pub observable: String,
    pub mean: f64,
    /// Standard error of the per-trajectory time averages.
    pub std_error: f64,
    pub trajectories: usize,
    pub burn_in: f64,
}

/// Time-average every trajectory over `t ≥ burn_in`, then average across
/// trajectories; the standard error is taken across trajectories.
pub fn ensemble_average(records: &[TrajectoryRecord], burn_in: f64) -> Result<Vec<EnsembleEstimate>> {
    let first = records.first().ok_or_else(|| Error::InvalidParameter("no trajectories".into()))?;
    for r in records {
        if r.times != first.times || !r.observables.keys().eq(first.observables.keys()) {
            return Err(Error::MismatchedRecords);
        }
    }
    let start = first.times.iter().position(|&t| t >= burn_in);
    let start = match start {
        Some(s) if burn_in < *first.times.last().unwrap() => s,
        _ => return Err(Error::InvalidParameter(format!("burn-in {burn_in} is not before t_max"))),
    };
    let n = records.len() as f64;
    Ok(first
        .observables
        .keys()
        .map(|name| {
            let means: Vec<f64> = records
                .iter()
                .map(|r| {
                    let s = &r.observables[name][start..];
                    s.iter().sum::<f64>() / s.len() as f64
                })
                .collect();
            let mean = means.iter().sum::<f64>() / n;
            let std_error = if records.len() > 1 {
                (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                f64::INFINITY
            };
            EnsembleEstimate { observable: name.clone(), mean, std_error, trajectories: records.len(), burn_in }
        })
        .collect())
}

/// `true` iff `‖L ψ‖ ≤ tol` for every operator of every family.
pub fn dark_state_check(families: &[JumpFamily], psi: &StateVector, tol: f64) -> Result<bool> {
    check_normalized(psi)?;
    let mut out = vec![ZERO; psi.dim()];
    for op in families.iter().flat_map(|f| f.iter()) {
        psi.compile(op)?.apply(psi.amps(), &mut out);
        if norm_sqr(&out).sqrt() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A sign change of a series between two plateaus where `|v| > threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Inversion {
    /// First zero crossing after the earlier plateau.
    pub time: f64,
    /// Sign of the plateau before the inversion.
    pub from: i8,
}

/// Inversions between consecutive opposite-sign plateaus, a plateau being a
/// run of samples with `|v| > threshold` and one sign lasting at least
/// `min_duration`.
pub fn polarization_inversions(times: &[f64], values: &[f64], threshold: f64, min_duration: f64) -> Vec<Inversion> {
    // (sign, first index, last index)
    let mut plateaus: Vec<(i8, usize, usize)> = Vec::new();
    let mut k = 0;
    while k < values.len() {
        if values[k].abs() <= threshold {
            k += 1;
            continue;
        }
        let sign = values[k].signum() as i8;
        let start = k;
        while k + 1 < values.len() && values[k + 1].abs() > threshold && values[k + 1].signum() as i8 == sign {
            k += 1;
        }
        if times[k] - times[start] >= min_duration {
            match plateaus.last_mut() {
                Some(p) if p.0 == sign => p.2 = k,
                _ => plateaus.push((sign, start, k)),
            }
        }
        k += 1;
    }
    plateaus
        .windows(2)
        .map(|w| {
            let (from, a, b) = (w[0].0, w[0].2, w[1].1);
            let time = (a..b)
                .find(|&i| values[i + 1].signum() as i8 != from)
                .map(|i| {
                    let (t0, t1, v0, v1) = (times[i], times[i + 1], values[i], values[i + 1]);
                    t0 + (t1 - t0) * v0 / (v0 - v1)
                })
                .unwrap_or(times[b]);
            Inversion { time, from }
        })
        .collect()
}

/// Events of `family` per unit time inside `[t − half_width, t + half_width]`
/// clipped to `[0, t_max]`.
pub fn event_rate_near(record: &TrajectoryRecord, family: usize, t: f64, half_width: f64) -> f64 {
    let t_max = *record.times.last().unwrap();
    let (a, b) = ((t - half_width).max(0.0), (t + half_width).min(t_max));
    let n = record.events_of(family).filter(|e| e.time >= a && e.time <= b).count();
    n as f64 / (b - a)
}

pub fn event_rate(record: &TrajectoryRecord, family: usize) -> f64 {
    record.events_of(family).count() as f64 / record.times.last().unwrap()
}

/// Matrix-free Lindblad generator `𝓛ρ = Σ LρL† − ½{K, ρ}` on `2^N × 2^N`
/// matrices.
pub struct Liouvillian {
    dim: usize,
    jumps: Vec<CompiledOperator>,
    decay: CompiledOperator,
}

impl Liouvillian {
    pub fn new(families: &[JumpFamily], cells: &[Cell]) -> Result<Self> {
        if cells.len() > MAX_EXACT_CELLS {
            return Err(Error::TooLarge { cells: cells.len(), limit: MAX_EXACT_CELLS });
        }
        let ops: Vec<&OperatorSum> = families.iter().flat_map(|f| f.iter()).collect();
        let jumps = ops.iter().map(|op| CompiledOperator::new(op, cells)).collect::<Result<Vec<_>>>()?;
        let decay = CompiledOperator::new(&decay_operator(ops.iter().copied()), cells)?;
        Ok(Self { dim: 1 << cells.len(), jumps, decay })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `A ρ` column by column.
    fn left(op: &CompiledOperator, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = rho.nrows();
        let mut out = DMatrix::zeros(d, d);
        for j in 0..d {
            op.apply(rho.column(j).as_slice(), out.column_mut(j).as_mut_slice());
        }
        out
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = Self::left(&self.decay, rho) * C64::new(-0.5, 0.0);
        // ρK = (K ρ†)† since K is Hermitian
        out -= Self::left(&self.decay, &rho.adjoint()).adjoint() * C64::new(0.5, 0.0);
        for l in &self.jumps {
            let lr = Self::left(l, rho);
            out += Self::left(l, &lr.adjoint()).adjoint();
        }
        out
    }

    /// The `d² × d²` superoperator in column-major vectorization.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim;
        let mut s = DMatrix::zeros(d * d, d * d);
        let mut e = DMatrix::zeros(d, d);
        for col in 0..d * d {
            e[(col % d, col / d)] = C64::new(1.0, 0.0);
            let img = self.apply(&e);
            s.column_mut(col).copy_from_slice(img.as_slice());
            e[(col % d, col / d)] = ZERO;
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NessMethod {
    /// Singular vectors of the dense superoperator.
    Dense,
    /// Restarted GMRES on the trace-bordered generator.
    Gmres,
}

#[derive(Clone, Debug)]
pub struct NessReport {
    /// Unit-trace Hermitian steady state; `None` when the kernel is degenerate.
    pub rho: Option<DMatrix<C64>>,
    /// Kernel basis (Frobenius-normalized). With [`NessMethod::Gmres`] a
    /// degenerate kernel is detected but only two of its vectors are given.
    pub kernel: Vec<DMatrix<C64>>,
    pub kernel_dim: usize,
    pub residual: f64,
    pub method: NessMethod,
    pub min_eigenvalue: Option<f64>,
}

/// Relative singular value below which a direction counts as kernel.
const KERNEL_TOL: f64 = 1e-9;

fn hermitize_unit_trace(rho: &DMatrix<C64>) -> Result<(DMatrix<C64>, f64)> {
    let h = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = h.trace();
    if tr.norm() < 1e-14 {
        return Err(Error::Numerical("steady-state candidate is traceless".into()));
    }
    let h = h / tr;
    let min = h.clone().symmetric_eigenvalues().min();
    if min < -NEGATIVE_EIGENVALUE_TOL {
        return Err(Error::Numerical(format!("steady state has eigenvalue {min:e}")));
    }
    Ok((h, min))
}

fn dense_kernel(l: &Liouvillian) -> Vec<DMatrix<C64>> {
    let d = l.dim();
    let s = l.to_dense();
    let svd = s.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max().max(1.0);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &sv)| sv <= KERNEL_TOL * smax)
        .map(|(k, _)| {
            let row = v_t.row(k).map(|c| c.conj());
            DMatrix::from_iterator(d, d, row.iter().copied())
        })
        .collect()
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Restarted GMRES for `A x = b` with a matrix-free `A`.
fn gmres<F: Fn(&[C64]) -> Vec<C64>>(apply: F, b: &[C64], restart: usize, tol: f64, max_iter: usize) -> Result<Vec<C64>> {
    let n = b.len();
    let bnorm = norm_sqr(b).sqrt();
    let mut x = vec![ZERO; n];
    let mut iters = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm_sqr(&r).sqrt();
        if beta <= tol * bnorm {
            return Ok(x);
        }
        if iters >= max_iter {
            return Err(Error::Numerical(format!("GMRES did not converge (relative residual {:e})", beta / bnorm)));
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|a| a / beta).collect()];
        let mut h = vec![vec![ZERO; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![ZERO; restart], vec![ZERO; restart]);
        let mut g = vec![ZERO; restart + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..restart {
            iters += 1;
            let mut w = apply(&v[k]);
            for (j, vj) in v.iter().enumerate() {
                let hj = inner(vj, &w);
                h[j][k] = hj;
                w.iter_mut().zip(vj).for_each(|(a, b)| *a -= hj * b);
            }
            let wn = norm_sqr(&w).sqrt();
            h[k + 1][k] = C64::new(wn, 0.0);
            for j in 0..k {
                let t = cs[j].conj() * h[j][k] + sn[j].conj() * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let (a, bb) = (h[k][k], h[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            cs[k] = if den > 0.0 { a / den } else { C64::new(1.0, 0.0) };
            sn[k] = if den > 0.0 { bb / den } else { ZERO };
            h[k][k] = C64::new(den, 0.0);
            h[k + 1][k] = ZERO;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k_used = k + 1;
            if g[k + 1].norm() <= tol * bnorm || wn == 0.0 || iters >= max_iter {
                break;
            }
            v.push(w.iter().map(|a| a / wn).collect());
        }
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&v[j]).for_each(|(a, b)| *a += yj * b);
        }
    }
}

fn gmres_kernel(l: &Liouvillian) -> Result<Vec<DMatrix<C64>>> {
    let d = l.dim();
    // 𝓛x + Tr(x) b = b forces Tr x = 1 and 𝓛x = 0; the Krylov space of b
    // picks the steady state reached from b, so two generic starting
    // states that end in different steady states reveal a degenerate kernel
    let solve = |b: DMatrix<C64>| -> Result<DMatrix<C64>> {
        let x = gmres(
            |v| {
                let m = DMatrix::from_column_slice(d, d, v);
                let tr = m.trace();
                (l.apply(&m) + &b * tr).as_slice().to_vec()
            },
            b.as_slice(),
            80,
            1e-13,
            20_000,
        )?;
        Ok(DMatrix::from_column_slice(d, d, &x))
    };
    let uniform = DMatrix::from_diagonal_element(d, d, C64::new(1.0 / d as f64, 0.0));
    let norm = (d * (d + 1) / 2) as f64;
    let ramp = DMatrix::from_fn(d, d, |i, j| if i == j { C64::new((i + 1) as f64 / norm, 0.0) } else { ZERO });
    let a = solve(uniform)?;
    let c = solve(ramp)?;
    let frob = |m: &DMatrix<C64>| m / C64::new(m.norm(), 0.0);
    if (&a - &c).norm() <= 1e-8 {
        Ok(vec![frob(&a)])
    } else {
        Ok(vec![frob(&a), frob(&c)])
    }
}

/// Steady states of the purely dissipative generator of `families` on
/// `cells`, by the dense superoperator for up to [`DENSE_EXACT_CELLS`]
/// cells and GMRES beyond.
pub fn exact_ness(families: &[JumpFamily], cells: &[Cell]) -> Result<NessReport> {
    let method = if cells.len() <= DENSE_EXACT_CELLS { NessMethod::Dense } else { NessMethod::Gmres };
    exact_ness_with(families, cells, method)
}

pub fn exact_ness_with(families: &[JumpFamily], cells: &[Cell], method: NessMethod) -> Result<NessReport> {
    let l = Liouvillian::new(families, cells)?;
    let kernel = match method {
        NessMethod::Dense => dense_kernel(&l),
        NessMethod::Gmres => gmres_kernel(&l)?,
    };
    if kernel.is_empty() {
        return Err(Error::Numerical("no kernel vector found".into()));
    }
    let residual = kernel.iter().map(|k| l.apply(k).norm()).fold(0.0, f64::max);
    if residual > RESIDUAL_TOL {
        return Err(Error::Numerical(format!("steady-state residual {residual:e}")));
    }
    let kernel_dim = kernel.len();
    let (rho, min_eigenvalue) = if kernel_dim == 1 {
        let (rho, min) = hermitize_unit_trace(&kernel[0])?;
        (Some(rho), Some(min))
    } else {
        (None, None)
    };
    Ok(NessReport { rho, kernel, kernel_dim, residual, method, min_eigenvalue })
}

/// `Tr(ρ A)`.
pub fn density_expectation(rho: &DMatrix<C64>, op: &OperatorSum, cells: &[Cell]) -> Result<f64> {
    let a = CompiledOperator::new(op, cells)?;
    Ok(Liouvillian::left(&a, rho).trace().re)
}

/// `Tr ρ²`.
pub fn purity(rho: &DMatrix<C64>) -> f64 {
    rho.iter().map(|c| c.norm_sqr()).sum()
}
