use num_complex::Complex64 as C64;

use super::pauli::Pauli;
use crate::error::{Error, Result};

/// `Tr[σ^j ρ(m) σ^i]` written as `coeff · m_axis` (or `coeff` alone when
/// `axis` is `None`). For every label pair exactly one such monomial
/// survives, which is what keeps the factorized trace polynomial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMonomial {
    pub coeff: C64,
    pub axis: Option<usize>,
}

impl TransferMonomial {
    pub fn eval(&self, m: &[f64; 3]) -> C64 {
        match self.axis {
            Some(k) => self.coeff * m[k],
            None => self.coeff,
        }
    }
}

pub fn transfer_monomial(i: Pauli, j: Pauli) -> TransferMonomial {
    // ρ = (1 + m·σ)/2; only k with σ^j σ^k σ^i ∝ 1 contributes.
    let (_, ji) = j.mul(i);
    let k = ji;
    let (ph1, p1) = j.mul(k);
    let (ph2, p2) = p1.mul(i);
    debug_assert_eq!(p2, Pauli::I);
    TransferMonomial { coeff: (ph1 * ph2).to_complex(), axis: k.axis() }
}

pub fn transfer_coefficient(i: Pauli, j: Pauli, m: &[f64; 3]) -> Result<C64> {
    let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1.0 + 1e-12 {
        return Err(Error::OutsideBlochBall(norm));
    }
    Ok(transfer_monomial(i, j).eval(m))
}
