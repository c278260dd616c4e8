use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::flow::FlowFunction;
use super::state::{max_norm_flat, MeanFieldState, BALL_SLACK};
use crate::exec::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn from_spectrum(spectrum: &[C64], margin: f64) -> Self {
        let lead = spectrum.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if lead < -margin {
            Stability::Stable
        } else if lead > margin {
            Stability::Unstable
        } else {
            Stability::Marginal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointReport {
    pub location: MeanFieldState,
    pub residual: f64,
    /// Jacobian eigenvalues, sorted by decreasing real part.
    pub spectrum: Vec<C64>,
    pub stability: Stability,
    pub seed_index: usize,
    pub seed: MeanFieldState,
}

impl FixedPointReport {
    pub fn leading_eigenvalue(&self) -> C64 {
        self.spectrum[0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedFailure {
    pub seed_index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct RootSearch {
    pub roots: Vec<FixedPointReport>,
    pub failures: Vec<SeedFailure>,
}

impl RootSearch {
    pub fn stable(&self) -> impl Iterator<Item = &FixedPointReport> {
        self.roots.iter().filter(|r| r.stability == Stability::Stable)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    /// Residual accepted as a root, relative to `1 + |J|` at the iterate.
    pub tol: f64,
    pub dedup: f64,
    pub margin: f64,
    pub max_iter: usize,
    pub execution: Execution,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { tol: 1e-12, dedup: 1e-6, margin: 1e-8, max_iter: 200, execution: Execution::default() }
    }
}

const GRID: [f64; 3] = [-0.9, 0.0, 0.9];
const SEED_RADIUS: f64 = 0.95;
const MAX_SEEDS: usize = 729;

/// Per species: the 27 points `{−0.9, 0, 0.9}³` pulled radially into the
/// ball of radius 0.95, plus the two z poles. Several species take the
/// product, thinned evenly to at most 729 seeds.
pub fn default_seeds(num_species: usize) -> Vec<MeanFieldState> {
    let mut single: Vec<[f64; 3]> = Vec::with_capacity(29);
    for &a in &GRID {
        for &b in &GRID {
            for &c in &GRID {
                let n = (a * a + b * b + c * c).sqrt();
                let s = if n > SEED_RADIUS { SEED_RADIUS / n } else { 1.0 };
                single.push([a * s, b * s, c * s]);
            }
        }
    }
    single.push([0.0, 0.0, 1.0]);
    single.push([0.0, 0.0, -1.0]);

    let total = single.len().pow(num_species as u32);
    let count = total.min(MAX_SEEDS.max(single.len()));
    (0..count)
        .map(|k| {
            let mut idx = if total > count { k * total / count } else { k };
            let mut vectors = Vec::with_capacity(num_species);
            for _ in 0..num_species {
                vectors.push(single[idx % single.len()]);
                idx /= single.len();
            }
            vectors.reverse();
            MeanFieldState::new(vectors).expect("seed grid lies inside the Bloch ball")
        })
        .collect()
}

/// Jacobian eigenvalues sorted by decreasing real part (ties by imaginary).
pub fn spectrum(jac: &DMatrix<f64>) -> Vec<C64> {
    let mut eig: Vec<C64> = jac.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    eig
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn newton_step(jac: &DMatrix<f64>, f: &[f64]) -> Option<DVector<f64>> {
    let rhs = -DVector::from_column_slice(f);
    if let Some(d) = jac.clone().lu().solve(&rhs) {
        if d.iter().all(|v| v.is_finite()) {
            return Some(d);
        }
    }
    jac.clone().svd(true, true).solve(&rhs, 1e-14).ok().filter(|d| d.iter().all(|v| v.is_finite()))
}

fn newton(flow: &FlowFunction, seed: &[f64], opts: &RootOptions) -> Result<(Vec<f64>, f64), String> {
    let mut x = seed.to_vec();
    let mut f = flow.eval_flat(&x);
    let mut r = norm(&f);
    let mut converged = false;
    let mut tol = opts.tol;
    for _ in 0..opts.max_iter {
        if !r.is_finite() {
            return Err("non-finite residual".into());
        }
        let jac = flow.jacobian_at(&x);
        tol = opts.tol * (1.0 + jac.norm());
        if r <= tol {
            converged = true;
        }
        let Some(delta) = newton_step(&jac, &f) else {
            return if converged { Ok((x, r)) } else { Err("singular Jacobian".into()) };
        };
        let step = delta.norm();
        if converged && step < 1e-13 {
            break;
        }
        let mut alpha = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + alpha * d).collect();
            let ft = flow.eval_flat(&trial);
            let rt = norm(&ft);
            if rt.is_finite() && (rt <= (1.0 - 1e-4 * alpha) * r || (converged && rt <= r)) {
                break Some((trial, ft, rt));
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                break None;
            }
        };
        match accepted {
            Some((trial, ft, rt)) => {
                x = trial;
                f = ft;
                r = rt;
            }
            None if converged => break,
            None => return Err(format!("line search stalled at residual {r:e}")),
        }
        if max_norm_flat(&x) > 2.0 {
            return Err("iterate left the Bloch ball".into());
        }
    }
    if r <= tol {
        Ok((x, r))
    } else {
        Err(format!("no convergence after {} iterations (residual {r:e})", opts.max_iter))
    }
}

/// Damped Newton from every seed; roots within `dedup` of an earlier one
/// (in seed order) are merged, unphysical roots are reported as failures.
/// The result is sorted by location and does not depend on the execution
/// strategy.
pub fn find_fixed_points(flow: &FlowFunction, seeds: &[MeanFieldState], opts: &RootOptions) -> RootSearch {
    let outcomes = opts.execution.map(seeds, |seed| newton(flow, &seed.flat(), opts));
    let mut search = RootSearch::default();
    let mut found: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    for (seed_index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Err(reason) => search.failures.push(SeedFailure { seed_index, reason }),
            Ok((x, r)) => {
                if max_norm_flat(&x) > 1.0 + BALL_SLACK {
                    search.failures.push(SeedFailure {
                        seed_index,
                        reason: format!("unphysical root with |m| = {}", max_norm_flat(&x)),
                    });
                    continue;
                }
                let duplicate = found.iter().any(|(_, y, _)| {
                    norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>()) < opts.dedup
                });
                if !duplicate {
                    found.push((seed_index, x, r));
                }
            }
        }
    }
    for (seed_index, x, residual) in found {
        let spectrum = spectrum(&flow.jacobian_at(&x));
        let stability = Stability::from_spectrum(&spectrum, opts.margin);
        search.roots.push(FixedPointReport {
            location: MeanFieldState::from_flat_unchecked(&x),
            residual,
            spectrum,
            stability,
            seed_index,
            seed: seeds[seed_index].clone(),
        });
    }
    search.roots.sort_by(|a, b| {
        let (fa, fb) = (a.location.flat(), b.location.flat());
        fa.iter().zip(&fb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    search
}
