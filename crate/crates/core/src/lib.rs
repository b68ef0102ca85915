//! A numerical laboratory for extended dissipative systems on lattices.
//!
//! The crate provides
//! - discrete calculus on finite windows of `Z^N` ([`lattice`]),
//! - the energy / dissipation / flux contract and its axiom checks ([`eds`]),
//! - five concrete lattice models ([`models`]),
//! - fixed-step explicit time integration ([`integrator`]),
//! - cube-wise energy balance, flux, dissipation and relaxation diagnostics
//!   ([`diagnostics`]),
//! - the flux-majorizing recurrence and its stable manifold ([`recurrence`]),
//! - the bistable coarsening experiment ([`coarsening`]).

pub mod coarsening;
pub mod diagnostics;
pub mod eds;
pub mod error;
pub mod integrator;
pub mod lattice;
pub mod models;
pub mod recurrence;

pub use error::{Error, Result};
