//! Robust reach-avoid control of a point-mass vehicle on a 3D integer grid.
//!
//! The crate is split along the lines of the control stack:
//!
//! - [`model`]: grid vectors, tasks, game parameters and the parametric hybrid
//!   game automaton (modes, scopes, goal/unsafe predicates, costs, jumps).
//! - [`solver`]: step-pre-shielded backward dynamic programming over a modal
//!   game, value-fixpoint approximation and scope extension.
//! - [`player`]: the hybrid game player with a semi-Markov wind adversary.
//! - [`scenario`]: route validation, tube perforation, fixtures and random
//!   scenarios.
//! - [`oracle`]: slow reference implementations used to cross-check the solver.
//!
//! Everything here is `no_std` with `alloc`. File formats, plotting and the
//! command line live in the `reachgrid` crate.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod cost;
pub mod geom;
pub mod model;
pub mod oracle;
pub mod player;
pub mod scenario;
pub mod solver;

pub use cost::Cost;
pub use geom::{Box3, Box6, GridVec, StateVec};
pub use model::{
    Event, GameParams, Grid, HybridState, ModalGame, Mode, SafetyRadius, Scope, Task,
};
pub use solver::{Solution, SolveOptions, SolvedGame};
