//! Acceptance checks. Prints one `PASS`/`FAIL` line per criterion.
//!
//! The process exits successfully even when a criterion fails, so the
//! report always reaches the end; set `ACCEPTANCE_STRICT=1` to turn any
//! failure into a non-zero exit status.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use lindblad_mf::meanfield::{
    compare_decay_models, default_seeds, find_fixed_points, fit_power_law, integrate, jacobian, spectrum,
    uniform_times, DecayModel, IntegrateOptions, MeanFieldState, RootOptions,
};
use lindblad_mf::operators::{Cell, CompiledOperator, JumpFamily, OperatorSum, StateVector};
use lindblad_mf::qtmc::{
    dark_state_check, density_expectation, ensemble_average, event_rate, event_rate_near, exact_ness,
    polarization_inversions, run_ensemble, site_cells, spin_observables, TrajectoryOptions, TrajectoryRecord,
    Unraveling,
};
use lindblad_mf::sweep::sha256_hex;
use lindblad_mf::tim::{
    locate_bifurcation, perturbed_paramagnet, tim_analytic_flow, tim_critical_coupling, tim_ferromagnets,
    tim_jumps, tim_paramagnet, tim_system_matrix_flow, tim_trace_flow, TimParameters,
};
use lindblad_mf::z2gh::{
    coexists, default_lattice, gauge_invariance_check, locate_endpoint, phase_diagram, to_unitary_gauge,
    unitary_gauge_reference, unitary_gauge_transform, z2gh_jumps, GaugeMode, PhaseDiagram, PhaseLabel,
    Z2ghParameters,
};
use lindblad_mf::{Execution, Lattice};

struct Outcome {
    pass: bool,
    detail: String,
    /// Serialized results, compared byte for byte on rerun.
    artifact: Vec<u8>,
}

fn outcome(pass: bool, detail: impl Into<String>, artifact: serde_json::Value) -> Outcome {
    Outcome { pass, detail: detail.into(), artifact: serde_json::to_vec(&artifact).unwrap() }
}

fn random_ball(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        if v.iter().map(|a| a * a).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

fn roots_opts() -> RootOptions {
    RootOptions { execution: Execution::Sequential, ..RootOptions::default() }
}

fn c1_critical_coupling() -> Outcome {
    let exact = tim_critical_coupling(4);
    let (lo, hi) = locate_bifurcation(4, 2.5, 3.5, 1e-7, &roots_opts()).unwrap();
    let pass = exact == 3.0 && lo >= 3.0 - 1e-6 && hi <= 3.0 + 1e-6;
    outcome(pass, format!("kappa_c(4) = {exact}, branch count 3 -> 1 in [{lo:.9}, {hi:.9}]"), json!([exact, lo, hi]))
}

fn c2_order_parameter_exponent() -> Outcome {
    let kc = tim_critical_coupling(4);
    let eps: Vec<f64> = (0..41).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 40.0)).collect();
    let mz: Vec<f64> = eps
        .iter()
        .map(|e| {
            let flow = tim_analytic_flow(TimParameters::new(kc * (1.0 - e), 4).unwrap());
            let s = find_fixed_points(&flow, &default_seeds(1), &roots_opts());
            s.stable().map(|r| r.location.vector(0)[2].abs()).fold(0.0, f64::max)
        })
        .collect();
    let fit = fit_power_law(&eps, &mz, (0.999e-3, 0.1001)).unwrap();
    let pass = (fit.exponent - 0.5).abs() <= 0.01;
    outcome(pass, format!("beta = {:.5} +- {:.1e} from {} points", fit.exponent, fit.std_error, fit.samples), json!([eps, mz, fit]))
}

fn c3_flow_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for (dim, q) in [(2, 4), (3, 6)] {
        let lattice = Lattice::torus(dim, 3).unwrap();
        assert_eq!(lattice.bulk_coordination(), q);
        for kappa in [0.4, 1.7, 3.0, 5.2] {
            let p = TimParameters::on_lattice(kappa, &lattice).unwrap();
            let flows = [tim_analytic_flow(p), tim_system_matrix_flow(p).unwrap(), tim_trace_flow(&lattice, kappa).unwrap()];
            for _ in 0..50 {
                let m = random_ball(&mut rng);
                let f0 = flows[0].eval_flat(&m);
                for f in &flows[1..] {
                    let g = f.eval_flat(&m);
                    worst = (0..3).map(|k| (f0[k] - g[k]).abs()).fold(worst, f64::max);
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |difference| = {worst:.2e} over 200 points per q"), json!(worst))
}

fn c4_jacobian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut fd_err: f64 = 0.0;
    for k in 0..100 {
        let q = if k % 2 == 0 { 4 } else { 6 };
        let flow = tim_analytic_flow(TimParameters::new(rng.random_range(0.0..8.0), q).unwrap());
        let m = MeanFieldState::single(random_ball(&mut rng)).unwrap();
        let exact = flow.exact_jacobian(&m.flat()).unwrap();
        fd_err = fd_err.max((jacobian(&flow, &m, 1e-4) - exact).amax());
    }
    let mut eig_err: f64 = 0.0;
    for q in [4, 6] {
        for kappa in [0.5, 1.0, 2.0, 3.0, 4.0, 6.0] {
            let flow = tim_analytic_flow(TimParameters::new(kappa, q).unwrap());
            let s = find_fixed_points(&flow, &default_seeds(1), &roots_opts());
            let para = s.roots.iter().find(|r| r.location.vector(0)[2].abs() < 1e-6).unwrap();
            let lead = spectrum(&flow.jacobian_at(&para.location.flat()))[0].re;
            eig_err = eig_err.max((lead - (2.0 - 0.5 * (kappa + 4.0 / q as f64))).abs());
        }
    }
    let pass = fd_err <= 1e-6 && eig_err <= 1e-10;
    outcome(pass, format!("finite-difference error {fd_err:.2e}, paramagnetic eigenvalue error {eig_err:.2e}"), json!([fd_err, eig_err]))
}

/// Samples whose deviation lies between `hi` and `floor` after first
/// dropping below `hi`.
fn resolved_tail(times: &[f64], dev: &[f64], hi: f64, floor: f64) -> (Vec<f64>, Vec<f64>) {
    let start = dev.iter().position(|&d| d < hi).unwrap_or(dev.len());
    times[start..].iter().zip(&dev[start..]).filter(|(_, &d)| d > floor).map(|(&t, &d)| (t, d)).unzip()
}

fn c5_critical_slowing() -> Outcome {
    let times = uniform_times(1e4, 1.0);
    let run = |kappa: f64| {
        let p = TimParameters::new(kappa, 4).unwrap();
        let traj = integrate(&tim_analytic_flow(p), &perturbed_paramagnet(p, 0.1).unwrap(), &times, &IntegrateOptions::default()).unwrap();
        let target = match tim_ferromagnets(p) {
            Some([_, f]) if kappa < tim_critical_coupling(4) => f,
            _ => tim_paramagnet(p),
        };
        let dx: Vec<f64> = traj.component(0).iter().map(|v| (v - target[0]).abs()).collect();
        let dz: Vec<f64> = traj.component(2).iter().map(|v| (v - target[2]).abs()).collect();
        (dx, dz)
    };
    let (dx, dz) = run(3.0);
    let eta_z = fit_power_law(&times, &dz, (1e2, 1e4)).unwrap();
    let eta_x = fit_power_law(&times, &dx, (1e2, 1e4)).unwrap();
    let mut pass = (eta_z.exponent + 0.5).abs() <= 0.05 && (eta_x.exponent + 1.0).abs() <= 0.05;
    let mut detail = format!("eta_z = {:.4}, eta_x = {:.4}", eta_z.exponent, eta_x.exponent);
    let mut prefs = Vec::new();
    for kappa in [2.5, 3.5] {
        let (dx, dz) = run(kappa);
        for (name, dev) in [("x", dx), ("z", dz)] {
            let (t, v) = resolved_tail(&times, &dev, 1e-3, 1e-9);
            let cmp = compare_decay_models(&t, &v).unwrap();
            pass &= cmp.preferred == DecayModel::Exponential;
            detail += &format!(
                "; kappa {kappa} {name}: logL exp {:.1} vs pow {:.1}",
                cmp.exponential.log_likelihood, cmp.power_law.log_likelihood
            );
            prefs.push(cmp);
        }
    }
    outcome(pass, detail, json!([eta_z, eta_x, prefs]))
}

fn product_state(cells: &[Cell], bloch: &[[f64; 3]]) -> StateVector {
    let local: Vec<[C64; 2]> = bloch
        .iter()
        .map(|m| {
            let theta = m[2].clamp(-1.0, 1.0).acos();
            let phi = m[1].atan2(m[0]);
            [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)]
        })
        .collect();
    let amps = (0..1usize << cells.len())
        .map(|i| (0..cells.len()).map(|k| local[k][(i >> k) & 1]).product())
        .collect();
    StateVector::new(cells.to_vec(), amps).unwrap()
}

fn c6_dark_states() -> Outcome {
    let l3 = Lattice::torus(2, 3).unwrap();
    let cells9 = site_cells(&l3);
    let [p, f] = tim_jumps(&l3, 1.0).unwrap();
    let ghz = StateVector::all_up(cells9.clone())
        .superpose(C64::new(0.5f64.sqrt(), 0.0), &StateVector::all_down(cells9.clone()), C64::new(0.5f64.sqrt(), 0.0))
        .unwrap();
    let dark = [
        dark_state_check(std::slice::from_ref(&p), &StateVector::all_plus(cells9.clone()), 1e-12).unwrap(),
        dark_state_check(std::slice::from_ref(&f), &StateVector::all_up(cells9.clone()), 1e-12).unwrap(),
        dark_state_check(std::slice::from_ref(&f), &ghz, 1e-12).unwrap(),
    ];

    let l2 = Lattice::torus(2, 2).unwrap();
    let cells4 = site_cells(&l2);
    let fams = tim_jumps(&l2, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut states: Vec<StateVector> = [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
        .iter()
        .map(|m| product_state(&cells4, &[*m; 4]))
        .collect();
    for _ in 0..5000 {
        let bloch: Vec<[f64; 3]> = (0..4)
            .map(|_| {
                let v = random_ball(&mut rng);
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                [v[0] / n, v[1] / n, v[2] / n]
            })
            .collect();
        states.push(product_state(&cells4, &bloch));
    }
    let none_dark = states.iter().all(|s| !dark_state_check(&fams, s, 1e-12).unwrap());
    // a dark state is a zero mode of Σ L†L, so a positive spectrum excludes one
    let k = fams.iter().flat_map(JumpFamily::iter).fold(OperatorSum::zero(), |acc, l| acc + &l.adjoint() * l);
    let dense: DMatrix<C64> = CompiledOperator::new(&k, &cells4).unwrap().to_dense();
    let gap = dense.symmetric_eigenvalues().min();
    let pass = dark.iter().all(|&d| d) && none_dark && gap > 1e-6;
    outcome(
        pass,
        format!("dark: P|+> {}, F|up> {}, F GHZ {}; {} product states all bright, min eig of sum L^dag L = {gap:.4}", dark[0], dark[1], dark[2], states.len()),
        json!([dark, none_dark, gap]),
    )
}

const C7_SEED: u64 = 7;
const C7_TRAJECTORIES: usize = 200;
const C7_BURN_IN: f64 = 20.0;

fn c7_records(kappa: f64, t_max: f64) -> Vec<TrajectoryRecord> {
    let l = Lattice::torus(2, 2).unwrap();
    let fams = tim_jumps(&l, kappa).unwrap();
    let psi = StateVector::all_up(site_cells(&l));
    run_ensemble(&fams, &spin_observables(&l), &psi, t_max, C7_SEED, C7_TRAJECTORIES, &TrajectoryOptions::default(), Execution::default()).unwrap()
}

fn c7_qtmc_vs_exact() -> (Outcome, Vec<(f64, f64)>) {
    let l = Lattice::torus(2, 2).unwrap();
    let cells = site_cells(&l);
    let obs = spin_observables(&l);
    let mut pass = true;
    let mut detail = Vec::new();
    let mut runs = Vec::new();
    let mut hashes = Vec::new();
    for kappa in [0.5, 1.0, 3.0, 6.0] {
        let ness = exact_ness(&tim_jumps(&l, kappa).unwrap(), &cells).unwrap();
        let rho = ness.rho.expect("unique steady state");
        let mut t_max = 200.0;
        let (records, est) = loop {
            let records = c7_records(kappa, t_max);
            let est = ensemble_average(&records, C7_BURN_IN).unwrap();
            if est.iter().all(|e| e.std_error < 0.02) || t_max >= 1600.0 {
                break (records, est);
            }
            t_max *= 2.0;
        };
        runs.push((kappa, t_max));
        hashes.push(sha256_hex(&serde_json::to_vec(&records).unwrap()));
        let mut worst: f64 = 0.0;
        for e in &est {
            let o = obs.iter().find(|o| o.name == e.observable).unwrap();
            let exact = density_expectation(&rho, &o.op, &cells).unwrap();
            let ratio = (e.mean - exact).abs() / (3.0 * e.std_error).max(1e-10);
            pass &= e.std_error < 0.02 && ratio <= 1.0;
            worst = worst.max(ratio);
        }
        detail.push(format!("kappa {kappa}: t_max {t_max}, max |diff| / max(3 SE, 1e-10) = {worst:.2}"));
    }
    (outcome(pass, detail.join("; "), json!(hashes)), runs)
}

const C8_MIN_PLATEAU: f64 = 5.0;

fn c8_record(seed: u64) -> TrajectoryRecord {
    let l = Lattice::torus(2, 3).unwrap();
    let cells = site_cells(&l);
    let fams = tim_jumps(&l, 1.0 / 9.0).unwrap();
    let u = Unraveling::new(&fams, &cells, &spin_observables(&l)).unwrap();
    u.run(&StateVector::all_up(cells), 200.0, seed, 0, &TrajectoryOptions::default()).unwrap()
}

fn c8_bistability() -> (Outcome, Option<u64>) {
    let mut tried = Vec::new();
    for seed in 0..20u64 {
        let r = c8_record(seed);
        let inv = polarization_inversions(&r.times, r.series("mean_sz").unwrap(), 0.5, C8_MIN_PLATEAU);
        let mean = event_rate(&r, 0);
        let near: Vec<f64> = inv.iter().map(|i| event_rate_near(&r, 0, i.time, 5.0)).collect();
        tried.push(inv.len());
        if inv.len() >= 2 && near.iter().all(|&n| n > mean) {
            let times: Vec<String> = inv.iter().map(|i| format!("{:.1}", i.time)).collect();
            let detail = format!(
                "seed {seed}: inversions at [{}], paramagnetic jump rate near them {:?} vs mean {mean:.3}",
                times.join(", "),
                near.iter().map(|n| (n * 1000.0).round() / 1000.0).collect::<Vec<_>>()
            );
            return (outcome(true, detail, json!(sha256_hex(&serde_json::to_vec(&r).unwrap()))), Some(seed));
        }
    }
    (outcome(false, format!("no seed in 0..20 qualifies (inversion counts {tried:?})"), json!(tried)), None)
}

fn z2gh_generic(mode: GaugeMode) -> Z2ghParameters {
    Z2ghParameters::new(0.7, 1.3, mode).unwrap().with_eta([0.9, 1.1, 0.8, 1.2, 0.6, 0.5]).unwrap()
}

fn c9_gauge_invariance() -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for extent in [2, 3] {
        let l = Lattice::torus(2, extent).unwrap();
        for fam in z2gh_jumps(&l, &z2gh_generic(GaugeMode::TwoField)).unwrap() {
            checked += fam.len();
            if let Err(v) = gauge_invariance_check(&fam, &l) {
                failures.push(format!("{} at {} vs G_{}", v.family, v.anchor, v.site));
            }
        }
    }
    outcome(failures.is_empty(), format!("{checked} operators checked, {} violations", failures.len()), json!([checked, failures]))
}

fn c10_unitary_gauge() -> Outcome {
    let mut worst_map: f64 = 0.0;
    let mut worst_inv: f64 = 0.0;
    let mut count = 0;
    for extent in [2, 3] {
        let l = Lattice::torus(2, extent).unwrap();
        let p = z2gh_generic(GaugeMode::Unitary);
        let table = z2gh_jumps(&l, &p).unwrap();
        let mapped = to_unitary_gauge(&table, &l).unwrap();
        let reference = unitary_gauge_reference(&l, &p).unwrap();
        for (a, b) in mapped.iter().zip(&reference) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.len(), b.len());
            for ((ca, oa), (cb, ob)) in a.operators.iter().zip(&b.operators) {
                assert_eq!(ca, cb);
                worst_map = worst_map.max(oa.distance(ob));
                count += 1;
            }
        }
        for op in table.iter().flat_map(JumpFamily::iter) {
            let back = unitary_gauge_transform(&unitary_gauge_transform(op, &l).unwrap(), &l).unwrap();
            worst_inv = worst_inv.max(back.distance(op));
        }
    }
    let pass = worst_map <= 1e-12 && worst_inv <= 1e-12;
    outcome(pass, format!("{count} operators: max distance to reference {worst_map:.1e}, T(T(L)) - L {worst_inv:.1e}"), json!([count, worst_map, worst_inv]))
}

fn diagram_json(d: &PhaseDiagram) -> serde_json::Value {
    json!(d
        .points
        .iter()
        .map(|p| match &p.report {
            Ok(r) => json!([p.omega, p.lambda, r.label, r.g_z, r.m_z, r.stable.len()]),
            Err(e) => json!([p.omega, p.lambda, e]),
        })
        .collect::<Vec<_>>())
}

fn c11_phase_structure() -> Outcome {
    let axis: Vec<f64> = (0..11).map(|k| 2.5 * k as f64).collect();
    let lattice = default_lattice();
    let opts = RootOptions::default();
    let two = phase_diagram(&lattice, GaugeMode::TwoField, &axis, &axis, &opts, Execution::default());
    let uni = phase_diagram(&lattice, GaugeMode::Unitary, &axis, &axis, &opts, Execution::default());
    let n = axis.len();
    let label = |d: &PhaseDiagram, i, j| d.point(i, j).report.as_ref().ok().map(|r| r.label);

    let two_regions = two.label_regions();
    let mut reasons = Vec::new();
    if two_regions != 3 {
        reasons.push(format!("two-field: {two_regions} regions (need 3)"));
    }
    if label(&two, 0, 0) != Some(PhaseLabel::ConfinedCharge) {
        reasons.push("(0,0) not confined".into());
    }
    if label(&two, n - 1, n - 1) != Some(PhaseLabel::Higgs) {
        reasons.push(format!("(25,25) is {:?}, not Higgs", label(&two, n - 1, n - 1)));
    }
    let neighbours = |i: usize, j: usize| {
        let mut v = Vec::new();
        if i + 1 < n {
            v.push((i + 1, j));
        }
        if j + 1 < n {
            v.push((i, j + 1));
        }
        v
    };
    let (mut confined_edges, mut free_higgs_edges) = (0, 0);
    for i in 0..n {
        for j in 0..n {
            for (a, b) in neighbours(i, j) {
                let (la, lb) = (label(&two, i, j), label(&two, a, b));
                let (ga, gb) = (two.selected_g_z(i, j).unwrap_or(0.0), two.selected_g_z(a, b).unwrap_or(0.0));
                let (ma, mb) = (two.selected_m_z(i, j).unwrap_or(0.0), two.selected_m_z(a, b).unwrap_or(0.0));
                let confined = Some(PhaseLabel::ConfinedCharge);
                if (la == confined) != (lb == confined) {
                    confined_edges += 1;
                    if (ga - gb).abs() <= 0.1 {
                        reasons.push(format!("confined boundary without g_z jump at ({i},{j})-({a},{b})"));
                    }
                }
                let pair = [la, lb];
                if pair.contains(&Some(PhaseLabel::FreeCharge)) && pair.contains(&Some(PhaseLabel::Higgs)) {
                    free_higgs_edges += 1;
                    if (ma - mb).abs() >= 0.1 {
                        reasons.push(format!("m_z onset step {:.3} at ({i},{j})-({a},{b})", (ma - mb).abs()));
                    }
                }
            }
        }
    }
    if confined_edges == 0 {
        reasons.push("no confined boundary".into());
    }
    if free_higgs_edges == 0 {
        reasons.push("no free-charge/Higgs boundary".into());
    }

    let uni_regions = uni.label_regions();
    if uni_regions != 2 {
        reasons.push(format!("unitary: {uni_regions} regions (need 2)"));
    }
    let coexisting = uni.points.iter().filter(|p| p.report.as_ref().is_ok_and(coexists)).count();
    let endpoint = locate_endpoint(&lattice, (axis[0], axis[n - 1]), (axis[0], axis[n - 1]), n, 1e-3, &opts);
    match &endpoint {
        Ok(e) => {
            let inside = |v: f64| v > axis[0] && v < axis[n - 1];
            if !(inside(e.omega) && inside(e.lambda)) {
                reasons.push(format!("endpoint ({:.2}, {:.2}) outside the grid", e.omega, e.lambda));
            }
        }
        Err(err) => reasons.push(format!("unitary: {coexisting} coexistence points, no endpoint ({err})")),
    }

    let counts = |d: &PhaseDiagram| {
        let mut c: Vec<String> = d.regions().iter().map(|(l, s)| format!("{}x{s}", l.map_or("failed", |l| l.as_str()))).collect();
        c.sort();
        c.join(" ")
    };
    let detail = format!(
        "two-field regions [{}], unitary regions [{}]{}",
        counts(&two),
        counts(&uni),
        if reasons.is_empty() { String::new() } else { format!("; {}", reasons.join("; ")) }
    );
    let ep = endpoint.ok();
    outcome(reasons.is_empty(), detail, json!([diagram_json(&two), diagram_json(&uni), ep]))
}

struct Check {
    id: usize,
    name: &'static str,
    budget: Duration,
}

fn report(check: &Check, o: &Outcome, elapsed: Duration) -> bool {
    let in_time = elapsed <= check.budget;
    let pass = o.pass && in_time;
    let timing = if in_time {
        format!("{:.2}s", elapsed.as_secs_f64())
    } else {
        format!("{:.2}s, over the {}s budget", elapsed.as_secs_f64(), check.budget.as_secs())
    };
    println!(
        "criterion {:>2} {}: {} ({timing}) {}",
        check.id,
        check.name,
        if pass { "PASS" } else { "FAIL" },
        o.detail
    );
    pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn main() {
    let secs = Duration::from_secs;
    let deterministic: [(Check, fn() -> Outcome); 9] = [
        (Check { id: 1, name: "critical coupling", budget: secs(1) }, c1_critical_coupling),
        (Check { id: 2, name: "order parameter exponent", budget: secs(1) }, c2_order_parameter_exponent),
        (Check { id: 3, name: "flow construction equivalence", budget: secs(10) }, c3_flow_equivalence),
        (Check { id: 4, name: "jacobian correctness", budget: secs(5) }, c4_jacobian),
        (Check { id: 5, name: "critical slowing down", budget: secs(30) }, c5_critical_slowing),
        (Check { id: 6, name: "dark states", budget: secs(10) }, c6_dark_states),
        (Check { id: 9, name: "gauge invariance", budget: secs(60) }, c9_gauge_invariance),
        (Check { id: 10, name: "unitary gauge correctness", budget: secs(10) }, c10_unitary_gauge),
        (Check { id: 11, name: "gauge-Higgs phase structure", budget: secs(1800) }, c11_phase_structure),
    ];
    let mut results: Vec<(usize, bool)> = Vec::new();
    let mut artifacts = Vec::new();
    for (check, f) in &deterministic[..6] {
        let (o, t) = timed(f);
        results.push((check.id, report(check, &o, t)));
        artifacts.push(o.artifact);
    }

    let c7 = Check { id: 7, name: "trajectories vs exact steady state", budget: secs(600) };
    let ((o7, runs), t) = timed(c7_qtmc_vs_exact);
    results.push((7, report(&c7, &o7, t)));
    let c8 = Check { id: 8, name: "bistable polarization", budget: secs(300) };
    let ((o8, seed8), t) = timed(c8_bistability);
    results.push((8, report(&c8, &o8, t)));

    for (check, f) in &deterministic[6..] {
        let (o, t) = timed(f);
        results.push((check.id, report(check, &o, t)));
        artifacts.push(o.artifact);
    }

    let c12 = Check { id: 12, name: "determinism", budget: secs(3600) };
    let (o12, t) = timed(|| {
        let mut mismatched: Vec<usize> = deterministic
            .iter()
            .zip(&artifacts)
            .filter(|((_, f), a)| f().artifact != **a)
            .map(|((c, _), _)| c.id)
            .collect();
        let same7 = runs.iter().all(|&(kappa, t_max)| c7_records(kappa, t_max) == c7_records(kappa, t_max));
        let first7 = c7_qtmc_vs_exact().0.artifact == o7.artifact;
        if !(same7 && first7) {
            mismatched.push(7);
        }
        let seed = seed8.unwrap_or(0);
        if c8_record(seed) != c8_record(seed) || (seed8.is_some() && c8_bistability().0.artifact != o8.artifact) {
            mismatched.push(8);
        }
        mismatched.sort();
        outcome(
            mismatched.is_empty(),
            if mismatched.is_empty() {
                "criteria 1-6 and 9-11 reproduce their outputs byte for byte, 7-8 their trajectory records".to_string()
            } else {
                format!("outputs differ on rerun for criteria {mismatched:?}")
            },
            json!(mismatched),
        )
    });
    results.push((12, report(&c12, &o12, t)));

    results.sort();
    let failed: Vec<usize> = results.iter().filter(|(_, p)| !p).map(|(id, _)| *id).collect();
    println!("acceptance: {} of {} criteria pass; failing: {failed:?}", results.len() - failed.len(), results.len());
    if !failed.is_empty() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
