//! Symbolic multi-site Pauli algebra.
//!
//! Jump operators and observables are kept as [`OperatorSum`]s, complex
//! linear combinations of [`PauliString`]s, and are never densified. The
//! same objects feed the state-vector trajectories ([`StateVector`],
//! [`CompiledOperator`]), the exact Liouvillian and the mean-field trace
//! ([`transfer_coefficient`]).
//!
//! Basis convention: the computational basis diagonalizes Z. Bit value 0 is
//! `|↑⟩` (Z = +1) and `|+⟩` is the X = +1 eigenstate.

mod compiled;
mod pauli;
mod state;
mod sum;
mod transfer;

use std::fmt;

pub use compiled::CompiledOperator;
pub use pauli::{pauli_product, Pauli, PauliString, Phase};
pub use state::{apply_to_state, StateVector};
pub use sum::{commutator, commutator_is_zero, simplify, OperatorSum, COEFF_FLOOR};
pub use transfer::{transfer_coefficient, transfer_monomial, TransferMonomial};

/// A lattice cell. Sites and edges carry spin-1/2 degrees of freedom;
/// faces only appear as anchors of jump operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Cell {
    Site(usize),
    Edge(usize),
    Face(usize),
}

/// Cell dimension: 0 for sites, 1 for edges, 2 for faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum CellKind {
    Site,
    Edge,
    Face,
}

impl Cell {
    pub fn cell_kind(self) -> CellKind {
        match self {
            Cell::Site(_) => CellKind::Site,
            Cell::Edge(_) => CellKind::Edge,
            Cell::Face(_) => CellKind::Face,
        }
    }

    pub fn of_kind(kind: CellKind, index: usize) -> Cell {
        match kind {
            CellKind::Site => Cell::Site(index),
            CellKind::Edge => Cell::Edge(index),
            CellKind::Face => Cell::Face(index),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Cell::Site(i) | Cell::Edge(i) | Cell::Face(i) => i,
        }
    }

    pub fn kind(self) -> &'static str {
        match self {
            Cell::Site(_) => "site",
            Cell::Edge(_) => "edge",
            Cell::Face(_) => "face",
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind(), self.index())
    }
}

/// A named set of jump operators, each anchored at the cell it is
/// labelled by (the site `s` of `P_s`, the face `p` of `F_p`, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct JumpFamily {
    pub name: String,
    pub operators: Vec<(Cell, OperatorSum)>,
}

impl JumpFamily {
    pub fn new(name: impl Into<String>, operators: Vec<(Cell, OperatorSum)>) -> Self {
        Self { name: name.into(), operators }
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &OperatorSum> {
        self.operators.iter().map(|(_, op)| op)
    }
}

/// Shorthand constructors used throughout the model modules.
pub fn x(cell: Cell) -> OperatorSum {
    OperatorSum::pauli(cell, Pauli::X)
}

pub fn y(cell: Cell) -> OperatorSum {
    OperatorSum::pauli(cell, Pauli::Y)
}

pub fn z(cell: Cell) -> OperatorSum {
    OperatorSum::pauli(cell, Pauli::Z)
}

pub fn identity() -> OperatorSum {
    OperatorSum::identity()
}
