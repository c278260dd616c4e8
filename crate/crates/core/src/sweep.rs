//! Configuration-driven sweeps.
//!
//! A run reads one TOML [`SweepConfig`], evaluates every grid point
//! (in parallel), and then writes UTF-8 CSV files plus a `manifest.json`
//! with the config echo, a SHA-256 per file and the status of every point.
//! Nothing is timestamped, so identical configs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lattice::Lattice;
use crate::meanfield::{default_seeds, find_fixed_points, FixedPointReport, FlowFunction, MeanFieldState, RootOptions};
use crate::operators::{x, z, Cell, JumpFamily, OperatorSum, StateVector};
use crate::qtmc::{
    density_expectation, ensemble_average, exact_ness, purity, spin_observables, EnsembleEstimate, Observable,
    TrajectoryOptions, TrajectoryRecord, Unraveling, MAX_EXACT_CELLS,
};
use crate::tim::{tim_analytic_flow, tim_jumps, tim_trace_flow, TimParameters};
use crate::z2gh::{classify_phase, default_lattice, z2gh_flow, z2gh_jumps, GaugeMode, Z2ghParameters};

/// Version of the config format and of the CSV column sets.
pub const SCHEMA_VERSION: u32 = 1;
/// Gauge-Higgs trajectories are limited to this many spins.
pub const MAX_Z2GH_TRAJECTORY_CELLS: usize = 12;
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Tim,
    Z2gh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    MeanfieldAnalytic,
    MeanfieldTrace,
    UnitaryGauge,
    Qtmc,
    Exact,
}

/// A list of values or an inclusive `linspace`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Default for Axis {
    fn default() -> Self {
        Axis::List(Vec::new())
    }
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::List(v) => v.clone(),
            Axis::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub kappa: Axis,
    #[serde(default)]
    pub omega: Axis,
    #[serde(default)]
    pub lambda: Axis,
}

/// Fully periodic hypercubic lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub dim: usize,
    pub extent: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: f64,
    pub dedup: f64,
    pub margin: f64,
    pub max_iter: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let r = RootOptions::default();
        Self { tol: r.tol, dedup: r.dedup, margin: r.margin, max_iter: r.max_iter }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    Up,
    Down,
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QtmcSpec {
    pub trajectories: usize,
    pub t_max: f64,
    pub burn_in: f64,
    pub p_cap: f64,
    pub sample_dt: f64,
    pub initial: Initial,
}

impl Default for QtmcSpec {
    fn default() -> Self {
        Self { trajectories: 200, t_max: 100.0, burn_in: 20.0, p_cap: 0.05, sample_dt: 0.1, initial: Initial::Up }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowFieldSpec {
    /// Two coordinate names, e.g. `["m_x", "m_z"]`.
    pub axes: [String; 2],
    /// Full mean-field state supplying the off-plane coordinates. Defaults
    /// to the stable fixed point with the largest z component of the first
    /// species.
    #[serde(default)]
    pub fixed: Option<Vec<f64>>,
    #[serde(default = "default_density")]
    pub density: usize,
}

fn default_density() -> usize {
    21
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub model: Model,
    pub mode: Mode,
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub qtmc: QtmcSpec,
    #[serde(default)]
    pub flowfield: Option<FlowFieldSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn parse_config(text: &str) -> Result<SweepConfig> {
    let cfg: SweepConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// One grid point: `κ` for the TIM, `(ω, λ)` for the gauge-Higgs model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PointParams {
    Tim { kappa: f64 },
    Z2gh { omega: f64, lambda: f64 },
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match (self.model, self.mode) {
            (Model::Tim, Mode::UnitaryGauge) => return Err(config_err("mode unitary-gauge requires model z2gh")),
            (Model::Z2gh, Mode::MeanfieldAnalytic) => {
                return Err(config_err("the gauge-Higgs model has no closed-form flow; use meanfield-trace"))
            }
            _ => {}
        }
        let (k, w, l) = (self.grid.kappa.values(), self.grid.omega.values(), self.grid.lambda.values());
        for (name, axis) in [("kappa", &k), ("omega", &w), ("lambda", &l)] {
            if let Some(bad) = axis.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(config_err(format!("grid.{name} contains {bad}; values must be finite and >= 0")));
            }
        }
        match self.model {
            Model::Tim if k.is_empty() => return Err(config_err("grid.kappa must be nonempty for model tim")),
            Model::Tim if !w.is_empty() || !l.is_empty() => {
                return Err(config_err("grid.omega / grid.lambda do not apply to model tim"))
            }
            Model::Z2gh if w.is_empty() || l.is_empty() => {
                return Err(config_err("grid.omega and grid.lambda must be nonempty for model z2gh"))
            }
            Model::Z2gh if !k.is_empty() => return Err(config_err("grid.kappa does not apply to model z2gh")),
            _ => {}
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.dedup > 0.0 && s.margin > 0.0 && s.max_iter > 0) {
            return Err(config_err("solver tolerances and max_iter must be positive"));
        }
        if matches!(self.mode, Mode::Qtmc | Mode::Exact) && self.lattice.is_none() {
            return Err(config_err("modes qtmc and exact need an explicit [lattice]"));
        }
        let lattice = self.lattice()?;
        let cells = self.cells(&lattice).len();
        match self.mode {
            Mode::Qtmc => {
                let limit = match self.model {
                    Model::Tim => crate::qtmc::MAX_TRAJECTORY_CELLS,
                    Model::Z2gh => MAX_Z2GH_TRAJECTORY_CELLS,
                };
                if cells > limit {
                    return Err(config_err(format!("{cells} spins exceed the trajectory limit of {limit}")));
                }
                let q = &self.qtmc;
                if q.trajectories == 0 {
                    return Err(config_err("qtmc.trajectories must be >= 1"));
                }
                if !(q.t_max > 0.0 && q.t_max.is_finite() && q.sample_dt > 0.0 && q.sample_dt <= q.t_max) {
                    return Err(config_err("qtmc.t_max and qtmc.sample_dt must be positive with sample_dt <= t_max"));
                }
                if !(q.burn_in >= 0.0 && q.burn_in < q.t_max) {
                    return Err(config_err("qtmc.burn_in must lie in [0, t_max)"));
                }
                if !(q.p_cap > 0.0 && q.p_cap <= 0.1) {
                    return Err(config_err("qtmc.p_cap must lie in (0, 0.1]"));
                }
            }
            Mode::Exact if cells > MAX_EXACT_CELLS => {
                return Err(config_err(format!("{cells} spins exceed the exact-solver limit of {MAX_EXACT_CELLS}")));
            }
            _ => {}
        }
        if let Some(ff) = &self.flowfield {
            let names = self.coordinate_names();
            for a in &ff.axes {
                if !names.contains(&a.as_str()) {
                    return Err(config_err(format!("flowfield axis {a} is not one of {names:?}")));
                }
            }
            if ff.axes[0] == ff.axes[1] {
                return Err(config_err("flowfield axes must differ"));
            }
            if ff.density < 2 {
                return Err(config_err("flowfield.density must be >= 2"));
            }
            if let Some(fixed) = &ff.fixed {
                if fixed.len() != names.len() {
                    return Err(config_err(format!("flowfield.fixed needs {} coordinates", names.len())));
                }
                MeanFieldState::from_flat(fixed).map_err(|e| config_err(format!("flowfield.fixed: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        let lattice = match (self.lattice, self.model) {
            (Some(spec), _) => Lattice::torus(spec.dim, spec.extent).map_err(|e| config_err(e.to_string()))?,
            (None, Model::Tim) => Lattice::torus(2, 3)?,
            (None, Model::Z2gh) => default_lattice(),
        };
        if self.model == Model::Z2gh && lattice.dimension() < 2 {
            return Err(config_err("the gauge-Higgs model needs lattice.dim >= 2"));
        }
        Ok(lattice)
    }

    /// Spins of the model: sites, then edges for the gauge-Higgs model.
    pub fn cells(&self, lattice: &Lattice) -> Vec<Cell> {
        let sites = (0..lattice.num_sites()).map(Cell::Site);
        match self.model {
            Model::Tim => sites.collect(),
            Model::Z2gh => sites.chain((0..lattice.num_edges()).map(Cell::Edge)).collect(),
        }
    }

    pub fn gauge(&self) -> GaugeMode {
        if self.mode == Mode::UnitaryGauge {
            GaugeMode::Unitary
        } else {
            GaugeMode::TwoField
        }
    }

    pub fn coordinate_names(&self) -> Vec<&'static str> {
        match (self.model, self.gauge()) {
            (Model::Tim, _) => vec!["m_x", "m_y", "m_z"],
            (Model::Z2gh, GaugeMode::TwoField) => vec!["g_x", "g_y", "g_z", "m_x", "m_y", "m_z"],
            (Model::Z2gh, GaugeMode::Unitary) => vec!["g_x", "g_y", "g_z"],
        }
    }

    /// Grid points in row-major order (`ω` outer, `λ` inner).
    pub fn points(&self) -> Vec<PointParams> {
        match self.model {
            Model::Tim => self.grid.kappa.values().into_iter().map(|kappa| PointParams::Tim { kappa }).collect(),
            Model::Z2gh => {
                let lambdas = self.grid.lambda.values();
                self.grid
                    .omega
                    .values()
                    .into_iter()
                    .flat_map(|omega| lambdas.iter().map(move |&lambda| PointParams::Z2gh { omega, lambda }))
                    .collect()
            }
        }
    }

    pub fn root_options(&self) -> RootOptions {
        let s = self.solver;
        RootOptions { tol: s.tol, dedup: s.dedup, margin: s.margin, max_iter: s.max_iter, execution: Execution::Sequential }
    }

    fn trajectory_options(&self) -> TrajectoryOptions {
        TrajectoryOptions { p_cap: self.qtmc.p_cap, sample_dt: self.qtmc.sample_dt }
    }
}

/// Seed of grid point `index`: the first word of stream `index` of the
/// master seed.
pub fn point_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

fn flow_at(cfg: &SweepConfig, lattice: &Lattice, p: PointParams) -> Result<FlowFunction> {
    match (p, cfg.mode) {
        (PointParams::Tim { kappa }, Mode::MeanfieldAnalytic) => {
            Ok(tim_analytic_flow(TimParameters::on_lattice(kappa, lattice)?))
        }
        (PointParams::Tim { kappa }, _) => tim_trace_flow(lattice, kappa),
        (PointParams::Z2gh { omega, lambda }, _) => z2gh_flow(&Z2ghParameters::new(omega, lambda, cfg.gauge())?, lattice),
    }
}

fn families_at(cfg: &SweepConfig, lattice: &Lattice, p: PointParams) -> Result<Vec<JumpFamily>> {
    match p {
        PointParams::Tim { kappa } => Ok(tim_jumps(lattice, kappa)?.to_vec()),
        PointParams::Z2gh { omega, lambda } => {
            Ok(z2gh_jumps(lattice, &Z2ghParameters::new(omega, lambda, cfg.gauge())?)?.to_vec())
        }
    }
}

fn average(cells: impl Iterator<Item = Cell>, f: fn(Cell) -> OperatorSum) -> OperatorSum {
    let ops: Vec<OperatorSum> = cells.map(f).collect();
    OperatorSum::average(&ops).unwrap_or_default()
}

/// Observables recorded for `model`: the spin averages of
/// [`spin_observables`] for the TIM; gauge (`tau_*`) and matter
/// (`sigma_*`) averages for the gauge-Higgs model.
pub fn model_observables(model: Model, lattice: &Lattice) -> Vec<Observable> {
    match model {
        Model::Tim => spin_observables(lattice),
        Model::Z2gh => {
            let edges = || (0..lattice.num_edges()).map(Cell::Edge);
            let sites = || (0..lattice.num_sites()).map(Cell::Site);
            vec![
                Observable::new("mean_tau_z", average(edges(), z)),
                Observable::new("mean_tau_x", average(edges(), x)),
                Observable::new("mean_sigma_z", average(sites(), z)),
                Observable::new("mean_sigma_x", average(sites(), x)),
            ]
        }
    }
}

fn initial_state(initial: Initial, cells: Vec<Cell>) -> StateVector {
    match initial {
        Initial::Up => StateVector::all_up(cells),
        Initial::Down => StateVector::all_down(cells),
        Initial::Plus => StateVector::all_plus(cells),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointStatus {
    pub index: usize,
    pub params: PointParams,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub command: String,
    pub config_echo: serde_json::Value,
    pub files: Vec<FileEntry>,
    pub status_per_point: Vec<PointStatus>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub failures: usize,
}

impl RunSummary {
    /// 0 when every point succeeded, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures == 0 {
            0
        } else {
            3
        }
    }
}

/// Buffers CSV tables and writes them, hashed, into one output directory.
struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.push(FileEntry { path: name.to_string(), sha256: hex::encode(Sha256::digest(bytes)) });
        Ok(())
    }

    fn write_csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.write(name, &bytes)
    }

    fn finish(self, cfg: &SweepConfig, command: &str, status: Vec<PointStatus>) -> Result<RunSummary> {
        let mut echo = cfg.clone();
        echo.output = None;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config_echo: serde_json::to_value(&echo)?,
            files: self.files,
            status_per_point: status,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join(MANIFEST), text)?;
        let failures = manifest.status_per_point.iter().filter(|s| !s.ok).count();
        Ok(RunSummary { manifest, failures })
    }
}

#[derive(Clone, Debug, Default)]
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn param_columns(model: Model) -> Vec<&'static str> {
    match model {
        Model::Tim => vec!["kappa"],
        Model::Z2gh => vec!["omega", "lambda"],
    }
}

fn param_values(p: PointParams) -> Vec<String> {
    match p {
        PointParams::Tim { kappa } => vec![num(kappa)],
        PointParams::Z2gh { omega, lambda } => vec![num(omega), num(lambda)],
    }
}

fn spectrum_string(root: &FixedPointReport) -> String {
    root.spectrum.iter().map(|z| format!("{:?}{}{:?}i", z.re, if z.im < 0.0 { "-" } else { "+" }, z.im.abs())).collect::<Vec<_>>().join(";")
}

enum PointResult {
    MeanField { roots: Vec<FixedPointReport>, phase: Option<std::result::Result<crate::z2gh::PhaseReport, String>> },
    Qtmc(Vec<EnsembleEstimate>),
    Exact { kernel_dim: usize, residual: f64, purity: Option<f64>, values: Vec<Option<f64>> },
}

fn mean_field_point(cfg: &SweepConfig, lattice: &Lattice, p: PointParams) -> Result<PointResult> {
    let flow = flow_at(cfg, lattice, p)?;
    let search = find_fixed_points(&flow, &default_seeds(flow.num_species()), &cfg.root_options());
    if search.roots.is_empty() {
        let reason = search.failures.first().map(|f| f.reason.clone()).unwrap_or_default();
        return Err(Error::Numerical(format!("no fixed point found ({reason})")));
    }
    let phase = (cfg.model == Model::Z2gh).then(|| classify_phase(&search.roots, cfg.gauge()).map_err(|e| e.to_string()));
    Ok(PointResult::MeanField { roots: search.roots, phase })
}

fn qtmc_point(cfg: &SweepConfig, lattice: &Lattice, index: usize, p: PointParams, master: u64) -> Result<(Vec<TrajectoryRecord>, PointResult)> {
    let cells = cfg.cells(lattice);
    let families = families_at(cfg, lattice, p)?;
    let observables = model_observables(cfg.model, lattice);
    let u = Unraveling::new(&families, &cells, &observables)?;
    let psi = initial_state(cfg.qtmc.initial, cells);
    let seed = point_seed(master, index);
    let opts = cfg.trajectory_options();
    let records = (0..cfg.qtmc.trajectories as u64)
        .map(|k| u.run(&psi, cfg.qtmc.t_max, seed, k, &opts))
        .collect::<Result<Vec<_>>>()?;
    let estimates = ensemble_average(&records, cfg.qtmc.burn_in)?;
    Ok((records, PointResult::Qtmc(estimates)))
}

fn exact_point(cfg: &SweepConfig, lattice: &Lattice, p: PointParams) -> Result<PointResult> {
    let cells = cfg.cells(lattice);
    let families = families_at(cfg, lattice, p)?;
    let ness = exact_ness(&families, &cells)?;
    let observables = model_observables(cfg.model, lattice);
    let values = match &ness.rho {
        Some(rho) => observables
            .iter()
            .map(|o| density_expectation(rho, &o.op, &cells).map(Some))
            .collect::<Result<Vec<_>>>()?,
        None => vec![None; observables.len()],
    };
    Ok(PointResult::Exact {
        kernel_dim: ness.kernel_dim,
        residual: ness.residual,
        purity: ness.rho.as_ref().map(purity),
        values,
    })
}

fn status_of<T>(index: usize, params: PointParams, r: &Result<T>) -> PointStatus {
    PointStatus { index, params, ok: r.is_ok(), error: r.as_ref().err().map(|e| e.to_string()) }
}

/// Evaluate every grid point and write `fixed_points.csv` (+ `phases.csv`
/// for the gauge-Higgs model), `estimates.csv` or `exact.csv`.
pub fn run_sweep(cfg: &SweepConfig, out: &Path, execution: Execution) -> Result<RunSummary> {
    cfg.validate()?;
    let lattice = cfg.lattice()?;
    let points = cfg.points();
    let mut dir = OutputDir::create(out)?;
    let results: Vec<Result<PointResult>> = execution.map_range(points.len(), |i| match cfg.mode {
        Mode::MeanfieldAnalytic | Mode::MeanfieldTrace | Mode::UnitaryGauge => mean_field_point(cfg, &lattice, points[i]),
        Mode::Qtmc => qtmc_point(cfg, &lattice, i, points[i], cfg.seed).map(|(_, r)| r),
        Mode::Exact => exact_point(cfg, &lattice, points[i]),
    });
    let mut status: Vec<PointStatus> = results.iter().enumerate().map(|(i, r)| status_of(i, points[i], r)).collect();
    let params = param_columns(cfg.model);

    match cfg.mode {
        Mode::MeanfieldAnalytic | Mode::MeanfieldTrace | Mode::UnitaryGauge => {
            let coords = cfg.coordinate_names();
            let mut header: Vec<&str> = vec!["point"];
            header.extend(&params);
            header.push("branch");
            header.extend(&coords);
            header.extend(["norm", "stability", "leading_re", "leading_im", "spectrum"]);
            let mut roots_table = Table::new(&header);
            let mut phase_header: Vec<&str> = vec!["point"];
            phase_header.extend(&params);
            phase_header.extend(["label", "g_z", "m_z", "stable_roots"]);
            let mut phases = Table::new(&phase_header);
            for (i, r) in results.iter().enumerate() {
                let Ok(PointResult::MeanField { roots, phase }) = r else { continue };
                for (b, root) in roots.iter().enumerate() {
                    let mut row = vec![i.to_string()];
                    row.extend(param_values(points[i]));
                    row.push(b.to_string());
                    row.extend(root.location.flat().into_iter().map(num));
                    let lead = root.leading_eigenvalue();
                    row.extend([
                        num(root.location.max_norm()),
                        root.stability.as_str().to_string(),
                        num(lead.re),
                        num(lead.im),
                        spectrum_string(root),
                    ]);
                    roots_table.rows.push(row);
                }
                if let Some(phase) = phase {
                    let mut row = vec![i.to_string()];
                    row.extend(param_values(points[i]));
                    match phase {
                        Ok(rep) => {
                            row.extend([rep.label.as_str().to_string(), num(rep.g_z), num(rep.m_z), rep.stable.len().to_string()]);
                        }
                        Err(e) => {
                            status[i].ok = false;
                            status[i].error = Some(e.clone());
                            row.extend(["unclassified".to_string(), String::new(), String::new(), "0".to_string()]);
                        }
                    }
                    phases.rows.push(row);
                }
            }
            dir.write_csv("fixed_points.csv", &roots_table)?;
            if cfg.model == Model::Z2gh {
                dir.write_csv("phases.csv", &phases)?;
            }
        }
        Mode::Qtmc => {
            let mut header: Vec<&str> = vec!["point"];
            header.extend(&params);
            header.extend(["observable", "mean", "std_error", "trajectories", "burn_in"]);
            let mut table = Table::new(&header);
            for (i, r) in results.iter().enumerate() {
                let Ok(PointResult::Qtmc(est)) = r else { continue };
                for e in est {
                    let mut row = vec![i.to_string()];
                    row.extend(param_values(points[i]));
                    row.extend([e.observable.clone(), num(e.mean), num(e.std_error), e.trajectories.to_string(), num(e.burn_in)]);
                    table.rows.push(row);
                }
            }
            dir.write_csv("estimates.csv", &table)?;
        }
        Mode::Exact => {
            let observables = model_observables(cfg.model, &lattice);
            let mut header: Vec<String> = vec!["point".into()];
            header.extend(params.iter().map(|s| s.to_string()));
            header.extend(["kernel_dim", "residual", "purity"].map(String::from));
            header.extend(observables.iter().map(|o| o.name.clone()));
            let mut table = Table::new(&header);
            for (i, r) in results.iter().enumerate() {
                let Ok(PointResult::Exact { kernel_dim, residual, purity, values }) = r else { continue };
                let mut row = vec![i.to_string()];
                row.extend(param_values(points[i]));
                row.extend([kernel_dim.to_string(), num(*residual), purity.map(num).unwrap_or_default()]);
                row.extend(values.iter().map(|v| v.map(num).unwrap_or_default()));
                table.rows.push(row);
            }
            dir.write_csv("exact.csv", &table)?;
        }
    }
    dir.finish(cfg, "sweep", status)
}

/// Trajectories at every grid point (`mode = "qtmc"`): one series file
/// and one jump-event file per trajectory.
pub fn run_trajectories(cfg: &SweepConfig, out: &Path, execution: Execution) -> Result<RunSummary> {
    cfg.validate()?;
    if cfg.mode != Mode::Qtmc {
        return Err(config_err("the trajectory command needs mode = \"qtmc\""));
    }
    let lattice = cfg.lattice()?;
    let points = cfg.points();
    let mut dir = OutputDir::create(out)?;
    let results = execution.map_range(points.len(), |i| qtmc_point(cfg, &lattice, i, points[i], cfg.seed).map(|(r, _)| r));
    let status = results.iter().enumerate().map(|(i, r)| status_of(i, points[i], r)).collect();
    for (i, r) in results.iter().enumerate() {
        let Ok(records) = r else { continue };
        for (k, rec) in records.iter().enumerate() {
            let names: Vec<&String> = rec.observables.keys().collect();
            let mut header = vec!["time".to_string()];
            header.extend(names.iter().map(|s| s.to_string()));
            let mut series = Table::new(&header);
            for (j, t) in rec.times.iter().enumerate() {
                let mut row = vec![num(*t)];
                row.extend(names.iter().map(|n| num(rec.observables[*n][j])));
                series.rows.push(row);
            }
            dir.write_csv(&format!("point{i}_traj{k}.csv"), &series)?;
            let mut events = Table::new(&["time", "family", "cell"]);
            for e in &rec.events {
                events.rows.push(vec![num(e.time), rec.families[e.family].clone(), e.cell.to_string()]);
            }
            dir.write_csv(&format!("point{i}_traj{k}_events.csv"), &events)?;
        }
    }
    dir.finish(cfg, "trajectory", status)
}

/// Flow samples on a plane through the mean-field state space at every
/// grid point, plus the fixed points found there.
pub fn emit_flow_field(cfg: &SweepConfig, out: &Path, execution: Execution) -> Result<RunSummary> {
    cfg.validate()?;
    if !matches!(cfg.mode, Mode::MeanfieldAnalytic | Mode::MeanfieldTrace | Mode::UnitaryGauge) {
        return Err(config_err("the flowfield command needs a mean-field mode"));
    }
    let ff = cfg.flowfield.clone().ok_or_else(|| config_err("the flowfield command needs a [flowfield] section"))?;
    let names = cfg.coordinate_names();
    let axis = |a: &str| names.iter().position(|n| *n == a).expect("validated axis");
    let (ia, ib) = (axis(&ff.axes[0]), axis(&ff.axes[1]));
    let lattice = cfg.lattice()?;
    let points = cfg.points();
    let mut dir = OutputDir::create(out)?;

    let results: Vec<Result<(Table, Table)>> = execution.map_range(points.len(), |i| {
        let flow = flow_at(cfg, &lattice, points[i])?;
        let search = find_fixed_points(&flow, &default_seeds(flow.num_species()), &cfg.root_options());
        let base = match &ff.fixed {
            Some(v) => v.clone(),
            None => search
                .stable()
                .max_by(|a, b| a.location.vector(0)[2].total_cmp(&b.location.vector(0)[2]))
                .map(|r| r.location.flat())
                .ok_or(Error::NoStableRoots)?,
        };
        let mut header: Vec<String> = vec![ff.axes[0].clone(), ff.axes[1].clone()];
        header.extend(names.iter().map(|n| format!("F_{n}")));
        let mut field = Table::new(&header);
        let n = ff.density;
        for a in 0..n {
            for b in 0..n {
                let mut xs = base.clone();
                xs[ia] = -1.0 + 2.0 * a as f64 / (n - 1) as f64;
                xs[ib] = -1.0 + 2.0 * b as f64 / (n - 1) as f64;
                if MeanFieldState::from_flat(&xs).is_err() {
                    continue;
                }
                let f = flow.eval_flat(&xs);
                let mut row = vec![num(xs[ia]), num(xs[ib])];
                row.extend(f.into_iter().map(num));
                field.rows.push(row);
            }
        }
        let mut header: Vec<&str> = names.clone();
        header.extend(["stability", "in_plane"]);
        let mut markers = Table::new(&header);
        for r in &search.roots {
            let loc = r.location.flat();
            let in_plane = loc.iter().zip(&base).enumerate().all(|(k, (x, y))| k == ia || k == ib || (x - y).abs() < 1e-6);
            let mut row: Vec<String> = loc.into_iter().map(num).collect();
            row.extend([r.stability.as_str().to_string(), in_plane.to_string()]);
            markers.rows.push(row);
        }
        Ok((field, markers))
    });
    let status = results.iter().enumerate().map(|(i, r)| status_of(i, points[i], r)).collect();
    for (i, r) in results.iter().enumerate() {
        if let Ok((field, markers)) = r {
            dir.write_csv(&format!("flowfield_point{i}.csv"), field)?;
            dir.write_csv(&format!("fixed_points_point{i}.csv"), markers)?;
        }
    }
    dir.finish(cfg, "flowfield", status)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
