//! Exact Bellman functions for the weak-type (1,1) bound of the dyadic
//! martingale transform, together with the machinery to stress-test them:
//!
//! * [`bellman`]: closed forms `B0`, `B`, `M`, coordinate changes, the
//!   boundary function, and the characteristic (foliation) coordinates.
//! * [`dyadic`]: dyadic paths, piecewise-constant functions on `[0,1)` as
//!   immutable binary trees, Haar analysis, and admissible pairs.
//! * [`transform`]: the martingale transform, weak-type tail ratios, and
//!   adversarial sign search.
//! * [`verify`]: seeded numerical verification suites: midpoint inequality,
//!   section concavity, invariances, Euler and Monge-Ampere identities, and
//!   the martingale path chain.
//! * [`extremize`]: self-similar near-extremal pairs with certified lower
//!   bounds (corner cascades, the refinement recursion, general points).
//! * [`dp`]: independent lower-bound oracles: grid value iteration over
//!   normalized coordinates and exhaustive small-tree search.
//!
//! Everything is deterministic: all randomness flows through explicit seeds,
//! and parallel reductions are order-independent.

pub mod bellman;
pub mod dp;
pub mod dyadic;
pub mod error;
pub mod extremize;
pub mod rng;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};

/// Artifact version, embedded in every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
