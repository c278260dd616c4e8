//! Mean-field, quantum-trajectory and exact steady-state tools for purely
//! dissipative spin lattice models.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: hypercubic cell complexes (sites, edges, faces) with
//!   incidence queries.
//! * [`operators`]: symbolic Pauli-string algebra, state-vector application
//!   and the single-spin transfer coefficients used by the mean-field trace.
//! * [`meanfield`]: the generic mean-field Lindblad engine (system matrices,
//!   factorized-trace reduction, fixed points, integration, power-law fits).
//! * [`tim`] and [`z2gh`]: the dissipative transverse-field Ising model and
//!   the dissipative Z2 gauge-Higgs model.
//! * [`qtmc`]: quantum-trajectory Monte Carlo and exact Liouvillian steady
//!   states for small lattices.
//! * [`sweep`]: configuration-driven parameter sweeps with CSV output and a
//!   hashed JSON manifest (driven by the `lindblad-mf` binary).
//!
//! Data-parallel loops (seed sweeps, trajectory ensembles, parameter grids)
//! go through [`exec::Execution`]; with the default `parallel` feature they
//! run on rayon, otherwise sequentially.

pub mod error;
pub mod exec;
pub mod lattice;
pub mod meanfield;
pub mod operators;
pub mod qtmc;
pub mod sweep;
pub mod tim;
pub mod z2gh;

pub use error::{Error, Result};
pub use exec::Execution;
pub use lattice::Lattice;
pub use num_complex::Complex64 as C64;
