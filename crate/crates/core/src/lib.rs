//! Hegselmann-Krause bounded-confidence opinion dynamics on `[0, 1]`.
//!
//! - [`model`]: opinion profiles, the synchronous and asynchronous update
//!   operators (prefix-sum and naive paths) and run-to-convergence.
//! - [`graph`]: the opinion graph, connectivity, and the edge-persistence
//!   and `H_t` predicates.
//! - [`verification`]: the matching decomposition of zero-sum combinations,
//!   the initial-disconnection bound, and randomized property suites.
//! - [`montecarlo`]: seeded, parallel, reproducible estimation of consensus
//!   and disconnection probabilities.

pub mod arith;
pub mod error;
pub mod graph;
pub mod model;
pub mod montecarlo;
pub mod verification;

pub use arith::Opinion;
pub use error::{HkError, Result};
pub use num_rational::BigRational;
