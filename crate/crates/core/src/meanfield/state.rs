use crate::error::{Error, Result};

/// Allowed excess of `|m_α|` over 1.
pub const BALL_SLACK: f64 = 1e-9;

/// One Bloch vector per field species, in species order.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldState {
    vectors: Vec<[f64; 3]>,
}

impl MeanFieldState {
    pub fn new(vectors: Vec<[f64; 3]>) -> Result<Self> {
        let state = Self { vectors };
        let worst = state.max_norm();
        if worst > 1.0 + BALL_SLACK || !worst.is_finite() {
            return Err(Error::OutsideBlochBall(worst));
        }
        Ok(state)
    }

    pub fn single(m: [f64; 3]) -> Result<Self> {
        Self::new(vec![m])
    }

    pub fn from_flat(x: &[f64]) -> Result<Self> {
        Self::new(flat_to_vectors(x))
    }

    /// No Bloch-ball check; for intermediate solver states.
    pub(crate) fn from_flat_unchecked(x: &[f64]) -> Self {
        Self { vectors: flat_to_vectors(x) }
    }

    pub fn num_species(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, species: usize) -> [f64; 3] {
        self.vectors[species]
    }

    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.vectors
    }

    pub fn flat(&self) -> Vec<f64> {
        self.vectors.iter().flatten().copied().collect()
    }

    pub fn norm(&self, species: usize) -> f64 {
        norm3(&self.vectors[species])
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().map(norm3).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &MeanFieldState) -> f64 {
        self.vectors
            .iter()
            .flatten()
            .zip(other.vectors.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn flat_to_vectors(x: &[f64]) -> Vec<[f64; 3]> {
    assert!(x.len() % 3 == 0, "flat state length {} is not a multiple of 3", x.len());
    x.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

pub(crate) fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Largest per-species norm of a flat state.
pub(crate) fn max_norm_flat(x: &[f64]) -> f64 {
    x.chunks_exact(3).map(|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()).fold(0.0, f64::max)
}
