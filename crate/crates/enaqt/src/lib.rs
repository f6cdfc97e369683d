//! Simulation engine for dephasing-assisted exciton transport and local
//! quantum uncertainty (LQU) dynamics in a small excitonic network.
//!
//! The model is a tight-binding chain of `n` sites coupled to three noise
//! channels: pure dephasing on every site, dissipation to a ground state
//! |g⟩, and an irreversible sink from one site into a reaction-center
//! state |RC⟩. Dynamics follow a Lindblad master equation propagated as a
//! vectorized superoperator. On top of that the crate evaluates transport
//! efficiency (two independent methods) and the LQU of the site block,
//! plus sweep orchestration and a CLI.

// Validation guards are written `!(x > 0.0)` on purpose: unlike
// `x <= 0.0`, the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod model;
pub mod dynamics;
pub mod correlations;
pub mod experiments;
pub mod cli;

pub use error::{Error, Result};
