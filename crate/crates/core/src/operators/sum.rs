use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use super::pauli::{pauli_product, Pauli, PauliString};
use super::Cell;

/// Coefficients below this magnitude are dropped during canonicalization.
pub const COEFF_FLOOR: f64 = 1e-14;

/// Complex-weighted sum of Pauli strings in canonical form: terms sorted by
/// string, no duplicate strings, no coefficient below [`COEFF_FLOOR`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorSum {
    terms: Vec<(C64, PauliString)>,
}

impl OperatorSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::scalar(C64::new(1.0, 0.0))
    }

    pub fn scalar(c: C64) -> Self {
        Self::from_terms(vec![(c, PauliString::identity())])
    }

    pub fn pauli(cell: Cell, p: Pauli) -> Self {
        Self::from_terms(vec![(C64::new(1.0, 0.0), PauliString::single(cell, p))])
    }

    pub fn from_string(c: C64, s: PauliString) -> Self {
        Self::from_terms(vec![(c, s)])
    }

    /// Canonicalize an arbitrary list of terms.
    pub fn from_terms(mut terms: Vec<(C64, PauliString)>) -> Self {
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut out: Vec<(C64, PauliString)> = Vec::with_capacity(terms.len());
        for (c, s) in terms {
            match out.last_mut() {
                Some((acc, last)) if *last == s => *acc += c,
                _ => out.push((c, s)),
            }
        }
        out.retain(|(c, _)| c.norm() >= COEFF_FLOOR);
        Self { terms: out }
    }

    pub fn terms(&self) -> &[(C64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support(&self) -> BTreeSet<Cell> {
        self.terms.iter().flat_map(|(_, s)| s.support()).collect()
    }

    pub fn acts_on(&self, cell: Cell) -> bool {
        self.terms.iter().any(|(_, s)| s.get(cell) != Pauli::I)
    }

    /// Hermitian conjugate (Pauli strings are Hermitian).
    pub fn adjoint(&self) -> Self {
        Self { terms: self.terms.iter().map(|(c, s)| (c.conj(), s.clone())).collect() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_terms(self.terms.iter().map(|(a, s)| (a * c, s.clone())).collect())
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// Apply a map to every Pauli string; the map returns a coefficient
    /// and replacement string.
    pub fn map_strings<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&PauliString) -> (C64, PauliString),
    {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(c, s)| {
                    let (k, t) = f(s);
                    (c * k, t)
                })
                .collect(),
        )
    }

    /// Sum of `ops` divided by their count (`None` for an empty list).
    pub fn average<'a, I: IntoIterator<Item = &'a OperatorSum>>(ops: I) -> Option<Self> {
        let mut n = 0usize;
        let mut terms = Vec::new();
        for op in ops {
            n += 1;
            terms.extend(op.terms.iter().cloned());
        }
        (n > 0).then(|| Self::from_terms(terms).scale_real(1.0 / n as f64))
    }

    /// Maximum coefficient difference against `other`, term by term.
    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).terms.iter().map(|(c, _)| c.norm()).fold(0.0, f64::max)
    }
}

/// Canonical form of a raw term list; value-equal as an operator.
pub fn simplify(terms: Vec<(C64, PauliString)>) -> OperatorSum {
    OperatorSum::from_terms(terms)
}

pub fn commutator(a: &OperatorSum, b: &OperatorSum) -> OperatorSum {
    a * b - b * a
}

/// Exact symbolic test of `[a, b] = 0`.
pub fn commutator_is_zero(a: &OperatorSum, b: &OperatorSum) -> bool {
    // Anticommuting string pairs contribute ±2ab; commuting pairs cancel.
    let mut terms = Vec::new();
    for (ca, sa) in a.terms() {
        for (cb, sb) in b.terms() {
            if !sa.commutes_with(sb) {
                let (ph, s) = pauli_product(sa, sb);
                terms.push((2.0 * ca * cb * ph.to_complex(), s));
            }
        }
    }
    OperatorSum::from_terms(terms).is_empty()
}

impl<'a, 'b> Mul<&'b OperatorSum> for &'a OperatorSum {
    type Output = OperatorSum;
    fn mul(self, rhs: &'b OperatorSum) -> OperatorSum {
        let mut terms = Vec::with_capacity(self.len() * rhs.len());
        for (ca, sa) in &self.terms {
            for (cb, sb) in &rhs.terms {
                let (ph, s) = pauli_product(sa, sb);
                terms.push((ca * cb * ph.to_complex(), s));
            }
        }
        OperatorSum::from_terms(terms)
    }
}

impl Mul for OperatorSum {
    type Output = OperatorSum;
    fn mul(self, rhs: OperatorSum) -> OperatorSum {
        &self * &rhs
    }
}

impl Mul<C64> for OperatorSum {
    type Output = OperatorSum;
    fn mul(self, rhs: C64) -> OperatorSum {
        self.scale(rhs)
    }
}

impl Mul<f64> for OperatorSum {
    type Output = OperatorSum;
    fn mul(self, rhs: f64) -> OperatorSum {
        self.scale_real(rhs)
    }
}

impl<'a, 'b> Add<&'b OperatorSum> for &'a OperatorSum {
    type Output = OperatorSum;
    fn add(self, rhs: &'b OperatorSum) -> OperatorSum {
        OperatorSum::from_terms(self.terms.iter().chain(&rhs.terms).cloned().collect())
    }
}

impl Add for OperatorSum {
    type Output = OperatorSum;
    fn add(self, rhs: OperatorSum) -> OperatorSum {
        &self + &rhs
    }
}

impl<'a, 'b> Sub<&'b OperatorSum> for &'a OperatorSum {
    type Output = OperatorSum;
    fn sub(self, rhs: &'b OperatorSum) -> OperatorSum {
        self + &(-rhs)
    }
}

impl Sub for OperatorSum {
    type Output = OperatorSum;
    fn sub(self, rhs: OperatorSum) -> OperatorSum {
        &self - &rhs
    }
}

impl Neg for &OperatorSum {
    type Output = OperatorSum;
    fn neg(self) -> OperatorSum {
        OperatorSum { terms: self.terms.iter().map(|(c, s)| (-c, s.clone())).collect() }
    }
}

impl Neg for OperatorSum {
    type Output = OperatorSum;
    fn neg(self) -> OperatorSum {
        -&self
    }
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (c, s)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({:.6}{:+.6}i)·{s}", c.re, c.im)?;
        }
        Ok(())
    }
}
