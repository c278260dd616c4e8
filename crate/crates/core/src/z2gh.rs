//! Dissipative Z2 gauge-Higgs model.
//!
//! Matter spins `σ` live on sites, gauge spins `τ` on edges. With
//! `B_p = Π_{e∈p} τ^z_e`, `I_e = σ^z_{s₁} τ^z_e σ^z_{s₂}` and the Gauss-law
//! generator `G_s = σ^x_s A_s`, `A_s = Π_{e∋s} τ^x_e`, the six baths are
//!
//! | family | operator |
//! |---|---|
//! | gauge string tension | `η₁ B_p (𝟙 − τ^x_{e∈p})` |
//! | gauge string fragility | `η₂ I_e (𝟙 − τ^x_e)` |
//! | Higgs brane tension | `η₃ σ^x_s (𝟙 − I_{e∈s})` |
//! | Higgs brane fragility | `η₄ τ^x_e (𝟙 − I_e)` |
//! | charge hopping | `η₅ I_e (𝟙 − σ^x_{s∈e})` |
//! | flux string tension | `η₆ τ^x_e (𝟙 − B_{p∈e})` |
//!
//! where `X_{a∈b}` is the average of `X_a` over the cells `a` incident to
//! `b`. Each family commutes with every `G_s`.
//!
//! In unitary gauge `T = Π_e [P⁺_e + σ^z_{s₁}σ^z_{s₂} P⁻_e]` maps the
//! physical subspace `G_s = 𝟙` onto `σ^x_s = 𝟙`, after which the matter field
//! drops out and a single gauge Bloch vector remains.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lattice::Lattice;
use crate::meanfield::{
    default_seeds, find_fixed_points, reduce_dissipator, FixedPointReport, FlowFunction, RootOptions,
    Species, Stability,
};
use crate::operators::{
    commutator_is_zero, identity, pauli_product, x, z, Cell, CellKind, JumpFamily, OperatorSum, Pauli,
    PauliString, Phase,
};

/// Threshold below which an order parameter counts as zero.
pub const ORDER_TOL: f64 = 1e-6;
/// Selected `g_z` values closer than this are treated as a tie.
const TIE_TOL: f64 = 1e-9;

pub const FAMILY_NAMES: [&str; 6] = [
    "gauge string tension",
    "gauge string fragility",
    "Higgs brane tension",
    "Higgs brane fragility",
    "charge hopping",
    "flux string tension",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeMode {
    /// Independent gauge and matter Bloch vectors.
    TwoField,
    /// Gauge field only, after the unitary-gauge rotation.
    Unitary,
}

impl GaugeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GaugeMode::TwoField => "two-field",
            GaugeMode::Unitary => "unitary",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Z2ghParameters {
    pub omega: f64,
    pub lambda: f64,
    pub eta: [f64; 6],
    pub gauge: GaugeMode,
}

impl Z2ghParameters {
    /// `η₁ = η₂ = η₅ = 1`, `η₃ = η₄ = √λ`, `η₆ = √ω`.
    pub fn new(omega: f64, lambda: f64, gauge: GaugeMode) -> Result<Self> {
        for (name, v) in [("omega", omega), ("lambda", lambda)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        let (sl, so) = (lambda.sqrt(), omega.sqrt());
        Ok(Self { omega, lambda, eta: [1.0, 1.0, sl, sl, 1.0, so], gauge })
    }

    pub fn with_eta(self, eta: [f64; 6]) -> Result<Self> {
        if let Some(bad) = eta.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("bath strengths must be finite and >= 0, got {bad}")));
        }
        Ok(Self { eta, ..self })
    }
}

fn check_lattice(lattice: &Lattice) -> Result<()> {
    if lattice.dimension() < 2 {
        return Err(Error::Lattice("the gauge-Higgs model needs D >= 2 (plaquettes)".into()));
    }
    if !lattice.is_fully_periodic() {
        return Err(Error::Lattice("the gauge-Higgs baths are defined on fully periodic lattices".into()));
    }
    Ok(())
}

fn product<I: IntoIterator<Item = OperatorSum>>(ops: I) -> OperatorSum {
    ops.into_iter().fold(identity(), |acc, op| &acc * &op)
}

fn average<I: IntoIterator<Item = OperatorSum>>(ops: I) -> OperatorSum {
    let ops: Vec<OperatorSum> = ops.into_iter().collect();
    OperatorSum::average(&ops).unwrap_or_default()
}

pub fn plaquette(lattice: &Lattice, face: usize) -> OperatorSum {
    product(lattice.edges_of_face(face).map(|e| z(Cell::Edge(e))))
}

/// `I_e = σ^z_{s₁} τ^z_e σ^z_{s₂}`.
pub fn gauged_ising(lattice: &Lattice, edge: usize) -> OperatorSum {
    let [a, b] = lattice.sites_of_edge(edge);
    product([z(Cell::Site(a)), z(Cell::Edge(edge)), z(Cell::Site(b))])
}

/// `A_s = Π_{e∋s} τ^x_e`.
pub fn star(lattice: &Lattice, site: usize) -> OperatorSum {
    product(lattice.edges_of_site(site).iter().map(|&e| x(Cell::Edge(e))))
}

/// `G_s = σ^x_s A_s`.
pub fn gauss_generator(lattice: &Lattice, site: usize) -> OperatorSum {
    &x(Cell::Site(site)) * &star(lattice, site)
}

/// The six baths in table order, anchored at their face, edge or site.
pub fn z2gh_jumps(lattice: &Lattice, params: &Z2ghParameters) -> Result<[JumpFamily; 6]> {
    check_lattice(lattice)?;
    let eta = params.eta;
    let one = identity;
    let faces = 0..lattice.num_faces();
    let edges = 0..lattice.num_edges();
    let sites = 0..lattice.num_sites();

    let tension = faces
        .map(|p| {
            let tx = average(lattice.edges_of_face(p).map(|e| x(Cell::Edge(e))));
            (Cell::Face(p), (&plaquette(lattice, p) * &(one() - tx)).scale_real(eta[0]))
        })
        .collect();
    let fragility = edges
        .clone()
        .map(|e| {
            let op = &gauged_ising(lattice, e) * &(one() - x(Cell::Edge(e)));
            (Cell::Edge(e), op.scale_real(eta[1]))
        })
        .collect();
    let brane_tension = sites
        .map(|s| {
            let iavg = average(lattice.edges_of_site(s).iter().map(|&e| gauged_ising(lattice, e)));
            (Cell::Site(s), (&x(Cell::Site(s)) * &(one() - iavg)).scale_real(eta[2]))
        })
        .collect();
    let brane_fragility = edges
        .clone()
        .map(|e| {
            let op = &x(Cell::Edge(e)) * &(one() - gauged_ising(lattice, e));
            (Cell::Edge(e), op.scale_real(eta[3]))
        })
        .collect();
    let hopping = edges
        .clone()
        .map(|e| {
            let sx = average(lattice.sites_of_edge(e).map(|s| x(Cell::Site(s))));
            (Cell::Edge(e), (&gauged_ising(lattice, e) * &(one() - sx)).scale_real(eta[4]))
        })
        .collect();
    let flux = edges
        .map(|e| {
            let bavg = average(lattice.faces_of_edge(e).iter().map(|&p| plaquette(lattice, p)));
            (Cell::Edge(e), (&x(Cell::Edge(e)) * &(one() - bavg)).scale_real(eta[5]))
        })
        .collect();

    let ops: [Vec<(Cell, OperatorSum)>; 6] = [tension, fragility, brane_tension, brane_fragility, hopping, flux];
    let mut k = 0;
    Ok(ops.map(|o| {
        let fam = JumpFamily::new(FAMILY_NAMES[k], o);
        k += 1;
        fam
    }))
}

/// The hand-written unitary-gauge baths, used to cross-check
/// [`to_unitary_gauge`]:
/// `η₁ B_p(𝟙 − τ^x_{e∈p})`, `η₂ τ^z_e(𝟙 − τ^x_e)`, `η₃ A_s(𝟙 − τ^z_{e∈s})`,
/// `η₄ τ^x_e(𝟙 − τ^z_e)`, `η₅ τ^z_e(𝟙 − A_{s∈e})`, `η₆ τ^x_e(𝟙 − B_{p∈e})`.
pub fn unitary_gauge_reference(lattice: &Lattice, params: &Z2ghParameters) -> Result<[JumpFamily; 6]> {
    check_lattice(lattice)?;
    let eta = params.eta;
    let one = identity;
    let tz = |e: usize| z(Cell::Edge(e));
    let tx = |e: usize| x(Cell::Edge(e));
    let edges = || 0..lattice.num_edges();

    let tension = (0..lattice.num_faces())
        .map(|p| {
            let avg = average(lattice.edges_of_face(p).map(tx));
            (Cell::Face(p), (&plaquette(lattice, p) * &(one() - avg)).scale_real(eta[0]))
        })
        .collect();
    let fragility = edges().map(|e| (Cell::Edge(e), (&tz(e) * &(one() - tx(e))).scale_real(eta[1]))).collect();
    let brane_tension = (0..lattice.num_sites())
        .map(|s| {
            let avg = average(lattice.edges_of_site(s).iter().map(|&e| tz(e)));
            (Cell::Site(s), (&star(lattice, s) * &(one() - avg)).scale_real(eta[2]))
        })
        .collect();
    let brane_fragility = edges().map(|e| (Cell::Edge(e), (&tx(e) * &(one() - tz(e))).scale_real(eta[3]))).collect();
    let hopping = edges()
        .map(|e| {
            let avg = average(lattice.sites_of_edge(e).map(|s| star(lattice, s)));
            (Cell::Edge(e), (&tz(e) * &(one() - avg)).scale_real(eta[4]))
        })
        .collect();
    let flux = edges()
        .map(|e| {
            let avg = average(lattice.faces_of_edge(e).iter().map(|&p| plaquette(lattice, p)));
            (Cell::Edge(e), (&tx(e) * &(one() - avg)).scale_real(eta[5]))
        })
        .collect();

    let ops: [Vec<(Cell, OperatorSum)>; 6] = [tension, fragility, brane_tension, brane_fragility, hopping, flux];
    let mut k = 0;
    Ok(ops.map(|o| {
        let fam = JumpFamily::new(FAMILY_NAMES[k], o);
        k += 1;
        fam
    }))
}

/// Image of a single Pauli under `A ↦ T A T†`.
fn conjugate_single(lattice: &Lattice, cell: Cell, p: Pauli) -> Result<(Phase, PauliString)> {
    let string = |factors: Vec<(Cell, Pauli)>| PauliString::from_factors(factors);
    let image_x = |cell: Cell| -> Vec<(Cell, Pauli)> {
        match cell {
            Cell::Site(s) => std::iter::once((cell, Pauli::X))
                .chain(lattice.edges_of_site(s).iter().map(|&e| (Cell::Edge(e), Pauli::X)))
                .collect(),
            _ => vec![(cell, Pauli::X)],
        }
    };
    let image_z = |cell: Cell| -> Vec<(Cell, Pauli)> {
        match cell {
            Cell::Edge(e) => {
                let [a, b] = lattice.sites_of_edge(e);
                vec![(Cell::Site(a), Pauli::Z), (cell, Pauli::Z), (Cell::Site(b), Pauli::Z)]
            }
            _ => vec![(cell, Pauli::Z)],
        }
    };
    match cell {
        Cell::Face(_) => return Err(Error::SupportMismatch(cell)),
        Cell::Site(s) if s >= lattice.num_sites() => return Err(Error::SupportMismatch(cell)),
        Cell::Edge(e) if e >= lattice.num_edges() => return Err(Error::SupportMismatch(cell)),
        _ => {}
    }
    Ok(match p {
        Pauli::I => (Phase::ONE, PauliString::identity()),
        Pauli::X => string(image_x(cell)),
        Pauli::Z => string(image_z(cell)),
        // Y = i X Z
        Pauli::Y => {
            let (ph, s) = string(image_x(cell).into_iter().chain(image_z(cell)).collect());
            (ph * Phase::I, s)
        }
    })
}

/// `T A T†` with `T τ^z_e T† = I_e`, `T τ^x_e T† = τ^x_e`,
/// `T σ^z_s T† = σ^z_s`, `T σ^x_s T† = G_s`. `T` is Hermitian and unitary,
/// so the map is an involution.
pub fn unitary_gauge_transform(op: &OperatorSum, lattice: &Lattice) -> Result<OperatorSum> {
    let mut terms = Vec::with_capacity(op.len());
    for (c, s) in op.terms() {
        let mut phase = Phase::ONE;
        let mut acc = PauliString::identity();
        for &(cell, p) in s.factors() {
            let (ph, img) = conjugate_single(lattice, cell, p)?;
            let (ph2, next) = pauli_product(&acc, &img);
            phase = phase * ph * ph2;
            acc = next;
        }
        terms.push((c * phase.to_complex(), acc));
    }
    Ok(OperatorSum::from_terms(terms))
}

/// Restrict to the subspace `σ^x_s = 𝟙`: every `σ^x_s` factor becomes the
/// identity. Terms with `σ^y` or `σ^z` on a site do not preserve the
/// subspace and are rejected.
pub fn project_unitary_gauge(op: &OperatorSum) -> Result<OperatorSum> {
    let mut terms = Vec::with_capacity(op.len());
    for (c, s) in op.terms() {
        let mut kept = Vec::with_capacity(s.weight());
        for &(cell, p) in s.factors() {
            match (cell, p) {
                (Cell::Site(_), Pauli::X) => {}
                (Cell::Site(_), _) => {
                    return Err(Error::InvalidParameter(format!(
                        "term {s} leaves the unitary-gauge subspace at {cell}"
                    )))
                }
                _ => kept.push((cell, p)),
            }
        }
        let (ph, string) = PauliString::from_factors(kept);
        terms.push((c * ph.to_complex(), string));
    }
    Ok(OperatorSum::from_terms(terms))
}

/// Transform and project every operator of every family.
pub fn to_unitary_gauge(families: &[JumpFamily], lattice: &Lattice) -> Result<Vec<JumpFamily>> {
    families
        .iter()
        .map(|fam| {
            let ops = fam
                .operators
                .iter()
                .map(|(cell, op)| Ok((*cell, project_unitary_gauge(&unitary_gauge_transform(op, lattice)?)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(JumpFamily::new(fam.name.clone(), ops))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeViolation {
    pub family: String,
    /// Position of the offending operator in the family.
    pub operator_index: usize,
    pub anchor: Cell,
    pub operator: OperatorSum,
    pub site: usize,
}

/// `Ok` iff every operator of `family` commutes with every `G_s`.
pub fn gauge_invariance_check(family: &JumpFamily, lattice: &Lattice) -> std::result::Result<(), GaugeViolation> {
    let generators: Vec<OperatorSum> = (0..lattice.num_sites()).map(|s| gauss_generator(lattice, s)).collect();
    for (k, (anchor, op)) in family.operators.iter().enumerate() {
        for (s, g) in generators.iter().enumerate() {
            if !commutator_is_zero(op, g) {
                return Err(GaugeViolation {
                    family: family.name.clone(),
                    operator_index: k,
                    anchor: *anchor,
                    operator: op.clone(),
                    site: s,
                });
            }
        }
    }
    Ok(())
}

/// The families whose mean-field reduction defines the flow in `params.gauge`.
pub fn z2gh_families(lattice: &Lattice, params: &Z2ghParameters) -> Result<Vec<JumpFamily>> {
    let table = z2gh_jumps(lattice, params)?;
    match params.gauge {
        GaugeMode::TwoField => Ok(table.to_vec()),
        GaugeMode::Unitary => to_unitary_gauge(&table, lattice),
    }
}

/// Two-field mode: species `gauge` (edges) then `matter` (sites), so the
/// flat state is `(g_x, g_y, g_z, m_x, m_y, m_z)`. Unitary mode: `gauge`
/// only.
pub fn z2gh_flow(params: &Z2ghParameters, lattice: &Lattice) -> Result<FlowFunction> {
    let families = z2gh_families(lattice, params)?;
    let gauge = Species::new("gauge", CellKind::Edge);
    match params.gauge {
        GaugeMode::TwoField => reduce_dissipator(
            &families,
            lattice,
            &[gauge, Species::new("matter", CellKind::Site)],
            &[Cell::Edge(0), Cell::Site(0)],
        ),
        GaugeMode::Unitary => reduce_dissipator(&families, lattice, &[gauge], &[Cell::Edge(0)]),
    }
}

/// Default mean-field lattice: the 3×3×3 torus. Extent 3 is the smallest
/// on which every neighbourhood consists of distinct cells; in D = 2 the
/// flux bath alone pushes `g_z` to zero and no free-charge phase exists.
pub fn default_lattice() -> Lattice {
    Lattice::torus(3, 3).expect("3x3x3 torus is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseLabel {
    ConfinedCharge,
    FreeCharge,
    Higgs,
    /// Unitary gauge cannot tell free charge and Higgs apart.
    FreeChargeOrHiggs,
}

impl PhaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseLabel::ConfinedCharge => "confined-charge",
            PhaseLabel::FreeCharge => "free-charge",
            PhaseLabel::Higgs => "higgs",
            PhaseLabel::FreeChargeOrHiggs => "free-charge-or-higgs",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PhaseReport {
    pub stable: Vec<FixedPointReport>,
    /// Index into `stable`.
    pub selected: usize,
    pub label: PhaseLabel,
    pub g_z: f64,
    /// `0` in unitary mode.
    pub m_z: f64,
}

impl PhaseReport {
    pub fn selected_root(&self) -> &FixedPointReport {
        &self.stable[self.selected]
    }
}

fn order_parameters(root: &FixedPointReport, mode: GaugeMode) -> (f64, f64) {
    let g = root.location.vector(0);
    match mode {
        GaugeMode::TwoField => (g[2], root.location.vector(1)[2]),
        GaugeMode::Unitary => (g[2], 0.0),
    }
}

/// Among the stable roots pick the one with the largest `g_z`, then the
/// largest `m_z`, and label it by which order parameters vanish.
pub fn classify_phase(roots: &[FixedPointReport], mode: GaugeMode) -> Result<PhaseReport> {
    let stable: Vec<FixedPointReport> = roots.iter().filter(|r| r.stability == Stability::Stable).cloned().collect();
    if stable.is_empty() {
        return Err(Error::NoStableRoots);
    }
    let mut selected = 0;
    for k in 1..stable.len() {
        let (g, m) = order_parameters(&stable[k], mode);
        let (gb, mb) = order_parameters(&stable[selected], mode);
        if g > gb + TIE_TOL || ((g - gb).abs() <= TIE_TOL && m > mb) {
            selected = k;
        }
    }
    let (g_z, m_z) = order_parameters(&stable[selected], mode);
    let label = match mode {
        _ if g_z.abs() <= ORDER_TOL => PhaseLabel::ConfinedCharge,
        GaugeMode::Unitary => PhaseLabel::FreeChargeOrHiggs,
        GaugeMode::TwoField if m_z.abs() <= ORDER_TOL => PhaseLabel::FreeCharge,
        GaugeMode::TwoField => PhaseLabel::Higgs,
    };
    Ok(PhaseReport { stable, selected, label, g_z, m_z })
}

/// Build the flow at one `(ω, λ)` point, find its roots and classify them.
pub fn phase_at(lattice: &Lattice, params: &Z2ghParameters, opts: &RootOptions) -> Result<PhaseReport> {
    let flow = z2gh_flow(params, lattice)?;
    let search = find_fixed_points(&flow, &default_seeds(flow.num_species()), opts);
    classify_phase(&search.roots, params.gauge)
}

#[derive(Clone, Debug)]
pub struct PhasePoint {
    pub omega: f64,
    pub lambda: f64,
    pub report: std::result::Result<PhaseReport, String>,
}

/// Row-major `(ω, λ)` grid: `ω` varies along rows (outer index), `λ` along
/// columns. Grid points run under `execution`, each root search
/// sequentially.
#[derive(Clone, Debug)]
pub struct PhaseDiagram {
    pub mode: GaugeMode,
    pub omegas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub points: Vec<PhasePoint>,
}

impl PhaseDiagram {
    pub fn point(&self, i: usize, j: usize) -> &PhasePoint {
        &self.points[i * self.lambdas.len() + j]
    }

    pub fn labels(&self) -> Vec<Option<PhaseLabel>> {
        self.points.iter().map(|p| p.report.as_ref().ok().map(|r| r.label)).collect()
    }

    /// Number of 4-connected regions of equal label (failed points form
    /// their own regions).
    pub fn label_regions(&self) -> usize {
        count_regions(&self.labels(), self.omegas.len(), self.lambdas.len())
    }

    /// Label region sizes: `(label, cells)` per connected region.
    pub fn regions(&self) -> Vec<(Option<PhaseLabel>, usize)> {
        regions(&self.labels(), self.omegas.len(), self.lambdas.len())
    }

    pub fn selected_g_z(&self, i: usize, j: usize) -> Option<f64> {
        self.point(i, j).report.as_ref().ok().map(|r| r.g_z)
    }

    pub fn selected_m_z(&self, i: usize, j: usize) -> Option<f64> {
        self.point(i, j).report.as_ref().ok().map(|r| r.m_z)
    }
}

pub fn phase_diagram(
    lattice: &Lattice,
    mode: GaugeMode,
    omegas: &[f64],
    lambdas: &[f64],
    opts: &RootOptions,
    execution: Execution,
) -> PhaseDiagram {
    let inner = RootOptions { execution: Execution::Sequential, ..*opts };
    let nl = lambdas.len();
    let points = execution.map_range(omegas.len() * nl, |k| {
        let (omega, lambda) = (omegas[k / nl], lambdas[k % nl]);
        let report = Z2ghParameters::new(omega, lambda, mode)
            .and_then(|p| phase_at(lattice, &p, &inner))
            .map_err(|e| e.to_string());
        PhasePoint { omega, lambda, report }
    });
    PhaseDiagram { mode, omegas: omegas.to_vec(), lambdas: lambdas.to_vec(), points }
}

fn regions<T: PartialEq + Copy>(labels: &[T], rows: usize, cols: usize) -> Vec<(T, usize)> {
    let mut seen = vec![false; labels.len()];
    let mut out = Vec::new();
    for start in 0..labels.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut size = 0;
        while let Some(k) = stack.pop() {
            size += 1;
            let (i, j) = (k / cols, k % cols);
            let mut nbrs = Vec::with_capacity(4);
            if i > 0 {
                nbrs.push(k - cols);
            }
            if i + 1 < rows {
                nbrs.push(k + cols);
            }
            if j > 0 {
                nbrs.push(k - 1);
            }
            if j + 1 < cols {
                nbrs.push(k + 1);
            }
            for n in nbrs {
                if !seen[n] && labels[n] == labels[start] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        out.push((labels[start], size));
    }
    out
}

/// Connected components of equal value on a row-major grid.
pub fn count_regions<T: PartialEq + Copy>(labels: &[T], rows: usize, cols: usize) -> usize {
    regions(labels, rows, cols).len()
}

/// Distinct stable `g_z` values (merged within `tol`) at one point.
pub fn stable_g_z(report: &PhaseReport, tol: f64) -> Vec<f64> {
    let mut values: Vec<f64> = report.stable.iter().map(|r| r.location.vector(0)[2]).collect();
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| (*a - *b).abs() < tol);
    values
}

/// Minimum `g_z` separation for two stable roots to count as coexisting
/// phases.
pub const COEXISTENCE_GAP: f64 = 0.05;

/// `true` if the report has stable roots whose `g_z` differ by more than
/// [`COEXISTENCE_GAP`].
pub fn coexists(report: &PhaseReport) -> bool {
    let g = stable_g_z(report, 1e-6);
    g.len() > 1 && g[g.len() - 1] - g[0] > COEXISTENCE_GAP
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalEndpoint {
    pub omega: f64,
    pub lambda: f64,
    /// Final `ω` bracket: no coexistence at `.0`, coexistence at `.1`.
    pub omega_bracket: (f64, f64),
    /// Coexistence interval in `λ` at `omega_bracket.1`.
    pub lambda_window: (f64, f64),
}

fn coexistence_window(
    lattice: &Lattice,
    omega: f64,
    window: (f64, f64),
    samples: usize,
    opts: &RootOptions,
) -> Result<Option<(f64, f64)>> {
    let lambdas: Vec<f64> =
        (0..samples).map(|k| window.0 + (window.1 - window.0) * k as f64 / (samples - 1) as f64).collect();
    let hits = opts.execution.map(&lambdas, |&lambda| {
        let inner = RootOptions { execution: Execution::Sequential, ..*opts };
        let p = Z2ghParameters::new(omega, lambda, GaugeMode::Unitary)?;
        Ok::<_, Error>(coexists(&phase_at(lattice, &p, &inner)?))
    });
    let mut found: Option<(f64, f64)> = None;
    for (lambda, hit) in lambdas.iter().zip(hits) {
        if hit? {
            found = Some(found.map_or((*lambda, *lambda), |(a, _)| (a, *lambda)));
        }
    }
    Ok(found)
}

/// Terminal point of the unitary-gauge first-order line. `ω` is bisected
/// between `omega_range.0` (no coexistence anywhere in `lambda_range`) and
/// `omega_range.1` (coexistence somewhere); each step scans `samples`
/// values of `λ` in a window that shrinks around the coexistence interval.
pub fn locate_endpoint(
    lattice: &Lattice,
    omega_range: (f64, f64),
    lambda_range: (f64, f64),
    samples: usize,
    rel_tol: f64,
    opts: &RootOptions,
) -> Result<CriticalEndpoint> {
    if samples < 3 || !(rel_tol > 0.0) || !(omega_range.0 < omega_range.1) || !(lambda_range.0 < lambda_range.1) {
        return Err(Error::InvalidParameter("endpoint search needs increasing ranges, >= 3 samples, tol > 0".into()));
    }
    if coexistence_window(lattice, omega_range.0, lambda_range, samples, opts)?.is_some() {
        return Err(Error::InvalidParameter(format!("coexistence already at omega = {}", omega_range.0)));
    }
    let Some(mut interval) = coexistence_window(lattice, omega_range.1, lambda_range, samples, opts)? else {
        return Err(Error::InvalidParameter(format!("no coexistence at omega = {}", omega_range.1)));
    };
    let (mut lo, mut hi) = omega_range;
    let mut window = lambda_range;
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        let pad = (window.1 - window.0) / (samples - 1) as f64;
        let trial = ((interval.0 - pad).max(lambda_range.0), (interval.1 + pad).min(lambda_range.1));
        match coexistence_window(lattice, mid, trial, samples, opts)? {
            Some(found) => {
                hi = mid;
                interval = found;
                window = trial;
            }
            None => lo = mid,
        }
    }
    Ok(CriticalEndpoint {
        omega: hi,
        lambda: 0.5 * (interval.0 + interval.1),
        omega_bracket: (lo, hi),
        lambda_window: interval,
    })
}

/// Cells touched by any operator of the families.
pub fn support_of(families: &[JumpFamily]) -> BTreeSet<Cell> {
    families.iter().flat_map(|f| f.iter()).flat_map(|op| op.support()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lat(dim: usize) -> Lattice {
        Lattice::torus(dim, 3).unwrap()
    }

    fn generic(mode: GaugeMode) -> Z2ghParameters {
        Z2ghParameters::new(0.7, 1.3, mode).unwrap().with_eta([0.9, 1.1, 0.8, 1.2, 0.6, 0.5]).unwrap()
    }

    #[test]
    fn every_family_is_gauge_invariant() {
        for dim in [2, 3] {
            let l = lat(dim);
            for fam in z2gh_jumps(&l, &generic(GaugeMode::TwoField)).unwrap() {
                assert_eq!(gauge_invariance_check(&fam, &l), Ok(()), "{}", fam.name);
            }
        }
    }

    #[test]
    fn violation_is_reported() {
        let l = lat(2);
        let bad = JumpFamily::new("bare field", vec![(Cell::Edge(3), z(Cell::Edge(3)))]);
        let v = gauge_invariance_check(&bad, &l).unwrap_err();
        assert_eq!(v.anchor, Cell::Edge(3));
        assert!(l.sites_of_edge(3).contains(&v.site));
    }

    #[test]
    fn family_sizes_and_anchors() {
        let l = lat(3);
        let fams = z2gh_jumps(&l, &generic(GaugeMode::TwoField)).unwrap();
        let sizes: Vec<usize> = fams.iter().map(|f| f.len()).collect();
        let (nf, ne, ns) = (l.num_faces(), l.num_edges(), l.num_sites());
        assert_eq!(sizes, [nf, ne, ns, ne, ne, ne]);
        assert!(matches!(fams[0].operators[0].0, Cell::Face(_)));
        assert!(matches!(fams[2].operators[0].0, Cell::Site(_)));
        assert!(z2gh_jumps(&Lattice::torus(1, 4).unwrap(), &generic(GaugeMode::TwoField)).is_err());
    }

    /// `T` restricted to the edges whose factors fail to commute with a
    /// single Pauli, written out as an operator sum.
    fn local_t(l: &Lattice, edges: &[usize]) -> OperatorSum {
        let half = |op: OperatorSum| op.scale_real(0.5);
        product(edges.iter().map(|&e| {
            let [a, b] = l.sites_of_edge(e);
            let plus = half(identity() + x(Cell::Edge(e)));
            let minus = half(identity() - x(Cell::Edge(e)));
            &plus + &(&(&z(Cell::Site(a)) * &z(Cell::Site(b))) * &minus)
        }))
    }

    #[test]
    fn single_pauli_images_match_explicit_conjugation() {
        let l = lat(2);
        let cells: Vec<Cell> =
            (0..l.num_sites()).map(Cell::Site).chain((0..l.num_edges()).map(Cell::Edge)).collect();
        for cell in cells {
            let edges: Vec<usize> = match cell {
                Cell::Site(s) => l.edges_of_site(s).to_vec(),
                Cell::Edge(e) => vec![e],
                Cell::Face(_) => unreachable!(),
            };
            let t = local_t(&l, &edges);
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let op = OperatorSum::pauli(cell, p);
                let explicit = &(&t * &op) * &t.adjoint();
                let mapped = unitary_gauge_transform(&op, &l).unwrap();
                assert!(explicit.distance(&mapped) < 1e-12, "{cell} {p}: {explicit} vs {mapped}");
            }
        }
        assert!(unitary_gauge_transform(&z(Cell::Face(0)), &l).is_err());
    }

    #[test]
    fn transform_is_an_involution_and_maps_gauss_law() {
        let l = lat(2);
        for fam in z2gh_jumps(&l, &generic(GaugeMode::TwoField)).unwrap() {
            for op in fam.iter().take(3) {
                let back = unitary_gauge_transform(&unitary_gauge_transform(op, &l).unwrap(), &l).unwrap();
                assert!(back.distance(op) < 1e-12);
            }
        }
        for s in 0..l.num_sites() {
            let g = unitary_gauge_transform(&gauss_generator(&l, s), &l).unwrap();
            assert!(g.distance(&x(Cell::Site(s))) < 1e-12);
        }
    }

    #[test]
    fn transformed_families_match_reference() {
        for dim in [2, 3] {
            let l = lat(dim);
            let p = generic(GaugeMode::Unitary);
            let table = z2gh_jumps(&l, &p).unwrap();
            let mapped = to_unitary_gauge(&table, &l).unwrap();
            let reference = unitary_gauge_reference(&l, &p).unwrap();
            for (a, b) in mapped.iter().zip(&reference) {
                assert_eq!(a.name, b.name);
                assert_eq!(a.len(), b.len());
                for ((ca, oa), (cb, ob)) in a.operators.iter().zip(&b.operators) {
                    assert_eq!(ca, cb);
                    assert!(oa.distance(ob) < 1e-12, "{}: {oa} vs {ob}", a.name);
                }
            }
            assert!(support_of(&mapped).iter().all(|c| matches!(c, Cell::Edge(_))));
        }
    }

    #[test]
    fn projection_rejects_non_physical_terms() {
        assert!(project_unitary_gauge(&z(Cell::Site(0))).is_err());
        let p = project_unitary_gauge(&(&x(Cell::Site(0)) * &z(Cell::Edge(1)))).unwrap();
        assert!(p.distance(&z(Cell::Edge(1))) < 1e-15);
    }

    fn product_expectation(s: &PauliString, state: &[f64]) -> f64 {
        s.factors()
            .iter()
            .map(|&(cell, p)| {
                let base = match cell {
                    Cell::Edge(_) => 0,
                    Cell::Site(_) => 3,
                    Cell::Face(_) => unreachable!(),
                };
                state[base + p.axis().unwrap()]
            })
            .product()
    }

    /// `d⟨P_c⟩/dt = Σ_L ⟨L†PL − ½{L†L, P}⟩` in the product state, built with
    /// the operator algebra instead of the transfer table.
    fn heisenberg(families: &[JumpFamily], center: Cell, axis: usize, state: &[f64]) -> f64 {
        let p = OperatorSum::pauli(center, Pauli::from_axis(axis));
        let mut total = C64::new(0.0, 0.0);
        for op in families.iter().flat_map(|f| f.iter()).filter(|op| op.acts_on(center)) {
            let ld = op.adjoint();
            let ldl = &ld * op;
            let gen = &(&(&ld * &p) * op) - &(&(&ldl * &p) + &(&p * &ldl)).scale_real(0.5);
            for (c, s) in gen.terms() {
                total += c * product_expectation(s, state);
            }
        }
        assert!(total.im.abs() < 1e-12);
        total.re
    }

    fn random_state(rng: &mut ChaCha8Rng, species: usize) -> Vec<f64> {
        (0..species)
            .flat_map(|_| {
                let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let n = (v.iter().map(|a| a * a).sum::<f64>()).sqrt();
                let r = rng.random_range(0.0..1.0) / n.max(1.0);
                v.map(|a| a * r)
            })
            .collect()
    }

    #[test]
    fn traced_flow_matches_heisenberg_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for mode in [GaugeMode::TwoField, GaugeMode::Unitary] {
            let l = lat(2);
            let p = generic(mode);
            let fams = z2gh_families(&l, &p).unwrap();
            let flow = z2gh_flow(&p, &l).unwrap();
            let centers: &[Cell] = match mode {
                GaugeMode::TwoField => &[Cell::Edge(0), Cell::Site(0)],
                GaugeMode::Unitary => &[Cell::Edge(0)],
            };
            for _ in 0..4 {
                let state = random_state(&mut rng, centers.len());
                let f = flow.eval_flat(&state);
                for (a, &c) in centers.iter().enumerate() {
                    for k in 0..3 {
                        let want = heisenberg(&fams, c, k, &state);
                        assert!((f[3 * a + k] - want).abs() < 1e-10, "{mode:?} {c} {k}: {} vs {want}", f[3 * a + k]);
                    }
                }
            }
        }
    }

    #[test]
    fn x_polarized_state_is_dark_without_omega_and_lambda() {
        for dim in [2, 3] {
            let p = Z2ghParameters::new(0.0, 0.0, GaugeMode::TwoField).unwrap();
            let f = z2gh_flow(&p, &lat(dim)).unwrap().eval_flat(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
            assert!(f.iter().all(|v| v.abs() < 1e-14), "{f:?}");
        }
    }

    #[test]
    fn flow_is_symmetric_under_matter_flip() {
        let flow = z2gh_flow(&generic(GaugeMode::TwoField), &lat(2)).unwrap();
        let s = [0.2, -0.1, 0.5, 0.3, 0.4, -0.6];
        let flipped = [s[0], s[1], s[2], s[3], -s[4], -s[5]];
        let (a, b) = (flow.eval_flat(&s), flow.eval_flat(&flipped));
        let expect = [a[0], a[1], a[2], a[3], -a[4], -a[5]];
        assert!(b.iter().zip(&expect).all(|(x, y)| (x - y).abs() < 1e-13));
    }

    #[test]
    fn confined_phase_at_origin_of_grid() {
        let opts = RootOptions { execution: Execution::Sequential, ..Default::default() };
        let p = Z2ghParameters::new(0.0, 0.0, GaugeMode::Unitary).unwrap();
        let report = phase_at(&default_lattice(), &p, &opts).unwrap();
        assert_eq!(report.label, PhaseLabel::ConfinedCharge);
        assert!(report.g_z.abs() <= ORDER_TOL);
    }

    #[test]
    fn region_counting() {
        let labels = [1, 1, 2, 1, 2, 2, 3, 3, 3];
        assert_eq!(count_regions(&labels, 3, 3), 3);
        assert_eq!(count_regions(&[1, 2, 1, 2], 2, 2), 2);
        assert_eq!(count_regions(&[1, 2, 2, 1], 2, 2), 4);
    }

    #[test]
    fn classification_prefers_largest_g_z() {
        use crate::meanfield::MeanFieldState;
        let root = |g: f64, m: f64| FixedPointReport {
            location: MeanFieldState::new(vec![[0.0, 0.0, g], [0.0, 0.0, m]]).unwrap(),
            residual: 0.0,
            spectrum: vec![C64::new(-1.0, 0.0)],
            stability: Stability::Stable,
            seed_index: 0,
            seed: MeanFieldState::new(vec![[0.0; 3], [0.0; 3]]).unwrap(),
        };
        let r = classify_phase(&[root(0.0, 0.0), root(0.4, 0.0), root(0.4, 0.3)], GaugeMode::TwoField).unwrap();
        assert_eq!(r.label, PhaseLabel::Higgs);
        assert_eq!(r.selected, 2);
        let r = classify_phase(&[root(0.0, 0.2), root(0.5, 0.0)], GaugeMode::TwoField).unwrap();
        assert_eq!(r.label, PhaseLabel::FreeCharge);
        let r = classify_phase(&[root(0.5, 0.3)], GaugeMode::Unitary).unwrap();
        assert_eq!(r.label, PhaseLabel::FreeChargeOrHiggs);
        assert!(matches!(classify_phase(&[], GaugeMode::Unitary), Err(Error::NoStableRoots)));
    }
}
