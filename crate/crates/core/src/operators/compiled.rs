use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::pauli::Pauli;
use super::sum::OperatorSum;
use super::Cell;
use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// All terms of an operator sharing one bit-flip pattern, folded into a
/// diagonal: `A|i⟩ = Σ_blocks diag[i] |i ^ flip⟩`.
#[derive(Clone, Debug)]
struct Block {
    flip: usize,
    diag: Vec<C64>,
}

/// An [`OperatorSum`] bound to a fixed cell ordering, ready to act on
/// amplitude arrays of length `2^N`. Cell `k` of the ordering is bit `k`
/// of the basis index; bit value 0 is `|↑⟩`.
#[derive(Clone, Debug)]
pub struct CompiledOperator {
    num_cells: usize,
    blocks: Vec<Block>,
}

impl CompiledOperator {
    pub fn new(op: &OperatorSum, cells: &[Cell]) -> Result<Self> {
        let position: HashMap<Cell, usize> = cells.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        Self::with_positions(op, cells.len(), &position)
    }

    pub(crate) fn with_positions(
        op: &OperatorSum,
        num_cells: usize,
        position: &HashMap<Cell, usize>,
    ) -> Result<Self> {
        let dim = 1usize << num_cells;
        let mut blocks: Vec<Block> = Vec::new();
        for (coeff, string) in op.terms() {
            let (mut flip, mut sign_mask, mut n_y) = (0usize, 0usize, 0u32);
            for &(cell, p) in string.factors() {
                let bit = 1usize << *position.get(&cell).ok_or(Error::SupportMismatch(cell))?;
                match p {
                    Pauli::X => flip |= bit,
                    Pauli::Y => {
                        flip |= bit;
                        sign_mask |= bit;
                        n_y += 1;
                    }
                    Pauli::Z => sign_mask |= bit,
                    Pauli::I => {}
                }
            }
            // Y|b⟩ = i(-1)^b |1-b⟩, Z|b⟩ = (-1)^b |b⟩
            let base = coeff * C64::new(0.0, 1.0).powu(n_y);
            let block = match blocks.iter_mut().find(|b| b.flip == flip) {
                Some(b) => b,
                None => {
                    blocks.push(Block { flip, diag: vec![ZERO; dim] });
                    blocks.last_mut().unwrap()
                }
            };
            for (i, d) in block.diag.iter_mut().enumerate() {
                if (i & sign_mask).count_ones() % 2 == 0 {
                    *d += base;
                } else {
                    *d -= base;
                }
            }
        }
        blocks.sort_by_key(|b| b.flip);
        Ok(Self { num_cells, blocks })
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn dim(&self) -> usize {
        1 << self.num_cells
    }

    /// `out ← A ψ`.
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = ZERO);
        self.apply_add(psi, C64::new(1.0, 0.0), out);
    }

    /// `out ← out + s · A ψ`.
    pub fn apply_add(&self, psi: &[C64], s: C64, out: &mut [C64]) {
        for b in &self.blocks {
            for (i, (&d, &a)) in b.diag.iter().zip(psi).enumerate() {
                out[i ^ b.flip] += s * d * a;
            }
        }
    }

    /// `⟨ψ|A|ψ⟩` without allocating.
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        let mut acc = ZERO;
        for b in &self.blocks {
            for (i, (&d, &a)) in b.diag.iter().zip(psi).enumerate() {
                acc += psi[i ^ b.flip].conj() * d * a;
            }
        }
        acc
    }

    /// Dense `2^N × 2^N` matrix; only meant for small systems.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for b in &self.blocks {
            for (i, &d) in b.diag.iter().enumerate() {
                m[(i ^ b.flip, i)] += d;
            }
        }
        m
    }
}
