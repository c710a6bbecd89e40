//! Stock redistribution for two-echelon retail networks.
//!
//! The crate builds the transfer MILP (item transfers `X`, package counts `Y`)
//! for a network of warehouses and outlets, solves it directly or through a
//! relax / round / pack pipeline, and ships the synthetic instance generator
//! and experiment harness used to compare redistribution policies and
//! solution schemes.
//!
//! Module map:
//!
//! - [`domain`]: instances, movement policies, solutions, dimension accounting.
//! - [`model`]: translation of an instance into a [`model::MilpModel`], plus
//!   objective evaluation and constraint checking on solutions.
//! - [`optimizer`]: LP relaxations, branch-and-bound, MPS/LP export.
//! - [`mcf`]: min-cost flow with lower bounds and the rounding network.
//! - [`rounding`]: iterated per-SKU rounding of a relaxed transfer plan.
//! - [`packing`]: per-movement package manifests.
//! - [`pipelines`]: the direct (`TP`) and relax-round-pack (`RTRP`) schemes.
//! - [`instgen`]: seeded instance generator and size presets.
//! - [`bench`]: policy sweeps, benchmarks and performance profiles.

pub mod bench;
pub mod domain;
pub mod error;
pub mod instgen;
pub mod mcf;
pub mod model;
pub mod optimizer;
pub mod packing;
pub mod pipelines;
pub mod rounding;

pub mod fixtures;

pub use domain::{
    Instance, Movement, MovementPolicy, ObjectiveTerms, SendRule, Solution, SolverConfig,
};
pub use error::{Error, Result};
