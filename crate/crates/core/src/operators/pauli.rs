use std::fmt;

use num_complex::Complex64 as C64;

use super::Cell;

/// Single-spin Pauli label. `I` is used by the transfer coefficients and
/// the single-site multiplication table; it is never stored in a
/// [`PauliString`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const XYZ: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Pauli::ALL[i]
    }

    /// Bloch axis (0, 1, 2) of a non-identity label.
    pub fn axis(self) -> Option<usize> {
        match self {
            Pauli::I => None,
            p => Some(p.index() - 1),
        }
    }

    pub fn from_axis(axis: usize) -> Pauli {
        Pauli::XYZ[axis]
    }

    /// `self · other = i^phase · result`.
    pub fn mul(self, other: Pauli) -> (Phase, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (Phase::ONE, p),
            (a, b) if a == b => (Phase::ONE, I),
            (X, Y) => (Phase::I, Z),
            (Y, Z) => (Phase::I, X),
            (Z, X) => (Phase::I, Y),
            (Y, X) => (Phase::MINUS_I, Z),
            (Z, Y) => (Phase::MINUS_I, X),
            (X, Z) => (Phase::MINUS_I, Y),
            _ => unreachable!(),
        }
    }

    pub fn anticommutes(self, other: Pauli) -> bool {
        self != Pauli::I && other != Pauli::I && self != other
    }

    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [[one, o], [o, one]],
            Pauli::X => [[o, one], [one, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[one, o], [o, -one]],
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

/// A power of the imaginary unit, `i^k` with `k ∈ {0, 1, 2, 3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    pub fn conj(self) -> Phase {
        Phase((4 - self.0) % 4)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Tensor product of single-cell Paulis, identity on every unlisted cell.
/// Factors are kept sorted by cell with no repeats and no identities.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    factors: Vec<(Cell, Pauli)>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(cell: Cell, p: Pauli) -> Self {
        let mut s = Self::identity();
        if p != Pauli::I {
            s.factors.push((cell, p));
        }
        s
    }

    /// Build from arbitrary `(cell, label)` pairs. Repeated cells are
    /// multiplied left to right, so the result carries a phase.
    pub fn from_factors<I: IntoIterator<Item = (Cell, Pauli)>>(factors: I) -> (Phase, Self) {
        factors
            .into_iter()
            .fold((Phase::ONE, Self::identity()), |(ph, acc), (c, p)| {
                let (ph2, next) = pauli_product(&acc, &Self::single(c, p));
                (ph * ph2, next)
            })
    }

    pub fn factors(&self) -> &[(Cell, Pauli)] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    pub fn get(&self, cell: Cell) -> Pauli {
        match self.factors.binary_search_by_key(&cell, |&(c, _)| c) {
            Ok(i) => self.factors[i].1,
            Err(_) => Pauli::I,
        }
    }

    pub fn support(&self) -> impl Iterator<Item = Cell> + '_ {
        self.factors.iter().map(|&(c, _)| c)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let mut anti = 0usize;
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (ca, pa) = self.factors[i];
            let (cb, pb) = other.factors[j];
            match ca.cmp(&cb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    anti += pa.anticommutes(pb) as usize;
                    i += 1;
                    j += 1;
                }
            }
        }
        anti % 2 == 0
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("I");
        }
        for (k, (c, p)) in self.factors.iter().enumerate() {
            if k > 0 {
                f.write_str("·")?;
            }
            write!(f, "{p}[{c}]")?;
        }
        Ok(())
    }
}

/// Multiply two Pauli strings: `a · b = phase · c`.
pub fn pauli_product(a: &PauliString, b: &PauliString) -> (Phase, PauliString) {
    let (fa, fb) = (&a.factors, &b.factors);
    let mut out = Vec::with_capacity(fa.len() + fb.len());
    let mut phase = Phase::ONE;
    let (mut i, mut j) = (0, 0);
    while i < fa.len() || j < fb.len() {
        let take_a = j >= fb.len() || (i < fa.len() && fa[i].0 < fb[j].0);
        let take_b = i >= fa.len() || (j < fb.len() && fb[j].0 < fa[i].0);
        if take_a {
            out.push(fa[i]);
            i += 1;
        } else if take_b {
            out.push(fb[j]);
            j += 1;
        } else {
            let (ph, p) = fa[i].1.mul(fb[j].1);
            phase = phase * ph;
            if p != Pauli::I {
                out.push((fa[i].0, p));
            }
            i += 1;
            j += 1;
        }
    }
    (phase, PauliString { factors: out })
}
