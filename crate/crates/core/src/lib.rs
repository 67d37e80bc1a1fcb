//! Longest increasing subsequences of random walks.
//!
//! The crate generates reproducible random walks, computes exact longest
//! weakly increasing subsequences, and implements the multiscale local-time
//! certificate, the dyadic excursion construction for simple walks, and
//! greedy orthant chains in higher dimensions, together with the Monte Carlo
//! harness that measures them.

pub mod dyadic;
pub mod error;
pub mod greedy;
pub mod harness;
pub mod lis;
pub mod multiscale;
pub mod report;
pub mod rng;
pub mod stats;
pub mod walk;
pub mod walk_io;

pub use error::{Error, Result};
pub use lis::MonotoneChain;
pub use walk::{generate_until_hit, generate_walk, hitting_time, StepKind, StepLaw, Stopped, Walk};
