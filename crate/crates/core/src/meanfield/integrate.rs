use super::flow::FlowFunction;
use super::state::MeanFieldState;
use crate::error::{Error, Result};

/// Tolerated excess of `|m_α|` over 1 before projecting back.
const PROJECT_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_init: 1e-3, h_min: 1e-12, h_max: f64::INFINITY, max_steps: 10_000_000 }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Flattened states, one per output time.
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[k]).collect()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one sample")
    }
}

/// `0, dt, 2 dt, …, t_max` (the last point is always `t_max`).
pub fn uniform_times(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    let mut t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).filter(|&t| t < t_max).collect();
    t.push(t_max);
    t
}

// Dormand–Prince 5(4) tableau; the flow is autonomous so the nodes c_i
// are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn project_into_ball(x: &mut [f64]) {
    for v in x.chunks_exact_mut(3) {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1.0 + PROJECT_SLACK {
            v.iter_mut().for_each(|c| *c /= n);
        }
    }
}

/// Adaptive Dormand–Prince integration of `∂_t m = F(m)`, reporting the
/// state at each of the increasing `output_times` (steps are shortened to
/// land on them exactly).
pub fn integrate(
    flow: &FlowFunction,
    m0: &MeanFieldState,
    output_times: &[f64],
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if output_times.windows(2).any(|w| w[1] < w[0]) || output_times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParameter("output times must be increasing and non-negative".into()));
    }
    let n = flow.dim();
    let mut x = m0.flat();
    let mut t = 0.0;
    let mut h = opts.h_init;
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut x5 = vec![0.0; n];
    flow.eval_into(&x, &mut k[0]);

    let mut out = Trajectory { times: Vec::with_capacity(output_times.len()), states: Vec::new() };
    let mut steps = 0usize;
    for &target in output_times {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Numerical(format!("step budget exhausted at t = {t}")));
            }
            let remaining = target - t;
            let landing = h >= remaining;
            let hs = if landing { remaining } else { h };
            for s in 1..7 {
                for i in 0..n {
                    stage[i] = x[i] + hs * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                flow.eval_into(&stage, &mut k[s]);
            }
            let mut err = 0.0;
            for i in 0..n {
                x5[i] = x[i] + hs * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>();
                let x4 = x[i] + hs * (0..7).map(|j| B4[j] * k[j][i]).sum::<f64>();
                let scale = opts.atol + opts.rtol * x[i].abs().max(x5[i].abs());
                err += ((x5[i] - x4) / scale).powi(2);
            }
            let err = (err / n as f64).sqrt();
            steps += 1;
            if !err.is_finite() {
                h = hs * 0.1;
            } else if err <= 1.0 {
                t = if landing { target } else { t + hs };
                x.copy_from_slice(&x5);
                project_into_ball(&mut x);
                // the last stage is F at the new point, unless projection moved it
                if max_abs_diff(&x, &x5) == 0.0 {
                    k.swap(0, 6);
                } else {
                    flow.eval_into(&x, &mut k[0]);
                }
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !landing || hs * grow > h {
                    h = (hs * grow).min(opts.h_max);
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
            if h < opts.h_min {
                return Err(Error::StepUnderflow { t, h, state: x.clone() });
            }
        }
        out.times.push(target);
        out.states.push(x.clone());
    }
    Ok(out)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::{Provenance, VectorField};
    use std::sync::Arc;

    struct Linear;

    impl VectorField for Linear {
        fn dim(&self) -> usize {
            3
        }
        fn eval(&self, x: &[f64], out: &mut [f64]) {
            out[0] = -x[0];
            out[1] = -0.5 * x[1] + x[2];
            out[2] = -x[1] - 0.5 * x[2];
        }
    }

    #[test]
    fn matches_closed_form_solution() {
        let flow = FlowFunction::new(Provenance::AnalyticClosedForm, vec!["s".into()], Arc::new(Linear));
        let m0 = MeanFieldState::single([0.6, 0.0, 0.5]).unwrap();
        let times = uniform_times(5.0, 0.5);
        let traj = integrate(&flow, &m0, &times, &IntegrateOptions::with_tol(1e-12)).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let decay = (-0.5 * t).exp();
            assert!((s[0] - 0.6 * (-t).exp()).abs() < 1e-10);
            assert!((s[1] - 0.5 * decay * t.sin()).abs() < 1e-10);
            assert!((s[2] - 0.5 * decay * t.cos()).abs() < 1e-10);
        }
        assert_eq!(traj.times, times);
    }

    #[test]
    fn uniform_grid_ends_at_t_max() {
        assert_eq!(uniform_times(1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(*uniform_times(1.0, 0.3).last().unwrap(), 1.0);
    }
}
