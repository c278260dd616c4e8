use num_complex::Complex64 as C64;

use super::compiled::CompiledOperator;
use super::sum::OperatorSum;
use super::Cell;
use crate::error::{Error, Result};

/// Amplitudes over the `2^N` product basis of `cells`. Cell `k` is bit `k`
/// of the basis index and bit value 0 is `|↑⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    cells: Vec<Cell>,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(cells: Vec<Cell>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1usize << cells.len() {
            return Err(Error::InvalidParameter(format!(
                "{} amplitudes for {} cells",
                amps.len(),
                cells.len()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        Ok(Self { cells, amps })
    }

    pub fn basis(cells: Vec<Cell>, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << cells.len()];
        amps[index] = C64::new(1.0, 0.0);
        Self { cells, amps }
    }

    /// Product state with the same single-spin state `[⟨↑|φ⟩, ⟨↓|φ⟩]` on
    /// every cell.
    pub fn product(cells: Vec<Cell>, local: [C64; 2]) -> Self {
        let n = cells.len();
        let amps = (0..1usize << n)
            .map(|i| {
                let ones = i.count_ones() as i32;
                local[0].powi(n as i32 - ones) * local[1].powi(ones)
            })
            .collect();
        Self { cells, amps }
    }

    pub fn all_up(cells: Vec<Cell>) -> Self {
        Self::basis(cells, 0)
    }

    pub fn all_down(cells: Vec<Cell>) -> Self {
        let last = (1 << cells.len()) - 1;
        Self::basis(cells, last)
    }

    pub fn all_plus(cells: Vec<Cell>) -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::product(cells, [h, h])
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
        n
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `a · self + b · other`; both states must share the cell ordering.
    pub fn superpose(&self, a: C64, other: &StateVector, b: C64) -> Result<StateVector> {
        if self.cells != other.cells {
            return Err(Error::InvalidParameter("cell orderings differ".into()));
        }
        let amps = self.amps.iter().zip(&other.amps).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { cells: self.cells.clone(), amps })
    }

    pub fn compile(&self, op: &OperatorSum) -> Result<CompiledOperator> {
        CompiledOperator::new(op, &self.cells)
    }

    pub fn expectation(&self, op: &OperatorSum) -> Result<C64> {
        Ok(self.compile(op)?.expectation(&self.amps))
    }
}

/// `A ψ`, evaluated term by term on the amplitude array.
pub fn apply_to_state(op: &OperatorSum, psi: &StateVector) -> Result<StateVector> {
    let compiled = psi.compile(op)?;
    let mut amps = vec![C64::new(0.0, 0.0); psi.dim()];
    compiled.apply(&psi.amps, &mut amps);
    Ok(StateVector { cells: psi.cells.clone(), amps })
}
