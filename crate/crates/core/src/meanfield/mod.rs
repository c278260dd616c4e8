//! Single-site mean-field reduction of purely dissipative Lindblad dynamics.
//!
//! Under the product ansatz every spin of species `α` carries the same
//! Bloch vector `m_α`, and the many-body equation collapses to a flow
//! `∂_t m = F(m)` on a product of Bloch balls. Two constructions are
//! provided: from effective single-spin jumps through their system
//! matrices ([`flow_from_effective_jumps`]), and directly from the exact
//! jump operators by tracing out all other spins ([`reduce_dissipator`]).
//! The rest of the module analyses such flows: fixed points and their
//! stability, time integration, and power-law fits of the relaxation.

mod fit;
mod flow;
mod integrate;
mod roots;
mod state;
mod system;
mod trace;

pub use fit::{
    compare_decay_models, fit_exponential, fit_power_law, DecayComparison, DecayModel,
    ExponentialFit, PowerLawFit,
};
pub use flow::{jacobian, FlowFunction, Provenance, VectorField};
pub use integrate::{integrate, uniform_times, IntegrateOptions, Trajectory};
pub use roots::{
    default_seeds, find_fixed_points, spectrum, FixedPointReport, RootOptions, RootSearch,
    SeedFailure, Stability,
};
pub use state::MeanFieldState;
pub use system::{flow_from_effective_jumps, EffectiveJump, SystemMatrix};
pub use trace::{reduce_dissipator, Polynomial, Species};
