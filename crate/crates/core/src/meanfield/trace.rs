use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::flow::{FlowFunction, Provenance, VectorField};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::operators::{Cell, CellKind, JumpFamily, OperatorSum, Pauli, Phase};

/// Largest imaginary part tolerated in a flow coefficient, relative to
/// the largest coefficient.
const IMAG_TOL: f64 = 1e-12;
/// Coefficient agreement required between cells of one species.
const INVARIANCE_TOL: f64 = 1e-10;

/// A mean-field species: all cells of `kind` share one Bloch vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Species {
    pub name: String,
    pub kind: CellKind,
}

impl Species {
    pub fn new(name: impl Into<String>, kind: CellKind) -> Self {
        Self { name: name.into(), kind }
    }
}

/// Real polynomial in the flattened mean-field coordinates. A monomial is
/// the sorted list of its variable indices (repeated for powers).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: Vec<(Vec<u16>, f64)>,
}

impl Polynomial {
    fn from_complex(map: BTreeMap<Vec<u16>, C64>) -> Result<Self> {
        let scale = map.values().map(|c| c.norm()).fold(1.0, f64::max);
        let mut terms = Vec::with_capacity(map.len());
        for (mono, c) in map {
            if c.im.abs() > IMAG_TOL * scale {
                return Err(Error::Numerical(format!(
                    "traced flow has an imaginary coefficient {:e}",
                    c.im
                )));
            }
            if c.re.abs() >= 1e-14 * scale {
                terms.push((mono, c.re));
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(Vec<u16>, f64)] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(m, _)| m.len()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(mono, c)| c * mono.iter().map(|&v| x[v as usize]).product::<f64>())
            .sum()
    }

    /// Adds `∂p/∂x_k` into `row[k]` for every variable.
    fn gradient_into(&self, x: &[f64], row: &mut [f64]) {
        for (mono, c) in &self.terms {
            for skip in 0..mono.len() {
                if skip > 0 && mono[skip] == mono[skip - 1] {
                    continue;
                }
                // d/dx of x^p is p x^(p-1): count the multiplicity
                let power = mono.iter().filter(|&&v| v == mono[skip]).count() as f64;
                let rest: f64 = mono
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &v)| x[v as usize])
                    .product();
                row[mono[skip] as usize] += c * power * rest;
            }
        }
    }

    /// Largest coefficient difference against `other`.
    pub fn distance(&self, other: &Polynomial) -> f64 {
        let mut diff: BTreeMap<&[u16], f64> = BTreeMap::new();
        for (m, c) in &self.terms {
            *diff.entry(m).or_default() += c;
        }
        for (m, c) in &other.terms {
            *diff.entry(m).or_default() -= c;
        }
        diff.values().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

struct PolynomialFlow {
    components: Vec<Polynomial>,
}

impl VectorField for PolynomialFlow {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.components) {
            *o = p.eval(x);
        }
    }

    fn exact_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.components.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut row = vec![0.0; n];
        for (r, p) in self.components.iter().enumerate() {
            row.iter_mut().for_each(|v| *v = 0.0);
            p.gradient_into(x, &mut row);
            for (k, v) in row.iter().enumerate() {
                jac[(r, k)] = *v;
            }
        }
        Some(jac)
    }
}

/// `Tr[σ^{p_1} ⋯ σ^{p_k} ρ]` for a single-spin `ρ = (1 + m·σ)/2`, as a phase
/// and the Bloch axis it picks (`None` for the constant 1).
fn trace_with_rho(labels: &[Pauli]) -> (Phase, Option<usize>) {
    let (phase, product) = labels.iter().fold((Phase::ONE, Pauli::I), |(ph, acc), &p| {
        let (ph2, next) = acc.mul(p);
        (ph * ph2, next)
    });
    (phase, product.axis())
}

/// Mean-field equations of motion of the spin at `center`.
fn center_polynomials(
    operators: &[&OperatorSum],
    center: Cell,
    species_of: &HashMap<CellKind, usize>,
) -> Result<[Polynomial; 3]> {
    let center_var = *species_of.get(&center.cell_kind()).ok_or(Error::UnassignedSpecies(center))? * 3;
    let mut acc: [BTreeMap<Vec<u16>, C64>; 3] = Default::default();
    for op in operators {
        let terms = op.terms();
        for (ca, pa) in terms {
            for (cb, pb) in terms {
                let (la, lb) = (pa.get(center), pb.get(center));
                if la == Pauli::I && lb == Pauli::I {
                    continue;
                }
                // Π_{k≠c} Tr[P_b^k P_a^k ρ_k]
                let mut weight = ca * cb.conj();
                let mut mono: Vec<u16> = Vec::new();
                let mut cells: Vec<Cell> = pa.support().chain(pb.support()).filter(|&k| k != center).collect();
                cells.sort_unstable();
                cells.dedup();
                for k in cells {
                    let alpha = *species_of.get(&k.cell_kind()).ok_or(Error::UnassignedSpecies(k))?;
                    let (ph, axis) = trace_with_rho(&[pb.get(k), pa.get(k)]);
                    weight *= ph.to_complex();
                    if let Some(axis) = axis {
                        mono.push((3 * alpha + axis) as u16);
                    }
                }
                // Tr[σ^n (p_a ρ p_b − ½ p_b p_a ρ − ½ ρ p_b p_a)]
                for (n, slot) in acc.iter_mut().enumerate() {
                    let s = Pauli::from_axis(n);
                    for (labels, factor) in [
                        ([lb, s, la], 1.0),
                        ([s, lb, la], -0.5),
                        ([lb, la, s], -0.5),
                    ] {
                        let (ph, axis) = trace_with_rho(&labels);
                        let mut m = mono.clone();
                        if let Some(axis) = axis {
                            m.push((center_var + axis) as u16);
                        }
                        m.sort_unstable();
                        *slot.entry(m).or_default() += weight * ph.to_complex() * factor;
                    }
                }
            }
        }
    }
    let [a, b, c] = acc;
    Ok([Polynomial::from_complex(a)?, Polynomial::from_complex(b)?, Polynomial::from_complex(c)?])
}

fn cells_of_kind(lattice: &Lattice, kind: CellKind) -> usize {
    match kind {
        CellKind::Site => lattice.num_sites(),
        CellKind::Edge => lattice.num_edges(),
        CellKind::Face => lattice.num_faces(),
    }
}

/// Factorized-trace mean-field flow of the exact jump families.
///
/// For every species the equations of motion are traced out at its
/// `center` cell and then recomputed at every other cell of that kind;
/// any disagreement means the families are not translationally invariant
/// and is rejected.
pub fn reduce_dissipator(
    families: &[JumpFamily],
    lattice: &Lattice,
    species: &[Species],
    centers: &[Cell],
) -> Result<FlowFunction> {
    if !lattice.is_fully_periodic() {
        return Err(Error::Lattice("mean-field reduction needs a fully periodic lattice".into()));
    }
    if centers.len() != species.len() {
        return Err(Error::InvalidParameter(format!(
            "{} centers for {} species",
            centers.len(),
            species.len()
        )));
    }
    let species_of: HashMap<CellKind, usize> = species.iter().enumerate().map(|(a, s)| (s.kind, a)).collect();
    if species_of.len() != species.len() {
        return Err(Error::InvalidParameter("two species share a cell kind".into()));
    }

    let mut by_cell: HashMap<Cell, Vec<&OperatorSum>> = HashMap::new();
    for op in families.iter().flat_map(|f| f.iter()) {
        for cell in op.support() {
            by_cell.entry(cell).or_default().push(op);
        }
    }

    let mut components = Vec::with_capacity(3 * species.len());
    for (alpha, (sp, &center)) in species.iter().zip(centers).enumerate() {
        if center.cell_kind() != sp.kind {
            return Err(Error::UnassignedSpecies(center));
        }
        let ops_at = |c: Cell| by_cell.get(&c).map(Vec::as_slice).unwrap_or(&[]);
        let reference = center_polynomials(ops_at(center), center, &species_of)?;
        for idx in 0..cells_of_kind(lattice, sp.kind) {
            let cell = Cell::of_kind(sp.kind, idx);
            if cell == center {
                continue;
            }
            let other = center_polynomials(ops_at(cell), cell, &species_of)?;
            for n in 0..3 {
                let d = reference[n].distance(&other[n]);
                if d > INVARIANCE_TOL {
                    return Err(Error::NotTranslationInvariant(format!(
                        "component {n} of species {alpha} differs by {d:e} between {center} and {cell}"
                    )));
                }
            }
        }
        components.extend(reference);
    }
    let names = species.iter().map(|s| s.name.clone()).collect();
    Ok(FlowFunction::new(Provenance::FactorizedTrace, names, Arc::new(PolynomialFlow { components })))
}
