use thiserror::Error;

use crate::operators::Cell;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator acts on {0} which is not part of the state")]
    SupportMismatch(Cell),

    #[error("Bloch vector outside the unit ball (|m| = {0})")]
    OutsideBlochBall(f64),

    #[error("effective jump has a nonzero trace component ({0:e})")]
    NotTraceless(f64),

    #[error("jump family is not translationally invariant: {0}")]
    NotTranslationInvariant(String),

    #[error("no species assigned to {0}")]
    UnassignedSpecies(Cell),

    #[error("step size underflow at t = {t} (h = {h:e}) in state {state:?}")]
    StepUnderflow { t: f64, h: f64, state: Vec<f64> },

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("system of {cells} cells exceeds the limit of {limit}")]
    TooLarge { cells: usize, limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no stable fixed point to classify")]
    NoStableRoots,

    #[error("records do not share a time grid and observable set")]
    MismatchedRecords,

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
