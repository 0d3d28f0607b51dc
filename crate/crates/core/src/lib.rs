//! Markov dynamics on jump-time configuration spaces of random walk bridges,
//! their coalescing couplings, exact reference laws, empirical Wasserstein
//! estimation, and closed-form distance bounds (bridges, a discretization
//! scheme, and nonlinear filtering).
//!
//! The bridges live on `[0, 1]` and start and end at the origin. A bridge
//! is encoded by its jump times:
//!
//! * walks on `{0, 1}`: an even-cardinality set of times ([`HypercubeConfig`]);
//! * walks on `Z`: a pair of equal-size sets of up/down jump times
//!   ([`LatticeConfig`]).
//!
//! Both spaces carry the graph metric induced by adding or removing one pair
//! of jump times. Every law studied here is the invariant law of a pure-jump
//! Markov chain on such a space (see [`chain`]).
//!
//! All randomness is derived from a `(seed, replica)` pair through
//! [`rng::replica_rng`], so every run is reproducible bit for bit regardless
//! of thread count.

pub mod bounds;
pub mod chain;
pub mod config;
pub mod coupling;
pub mod error;
pub mod filtering;
pub mod oracles;
pub mod rates;
pub mod rng;
pub mod stats;
pub mod wasserstein;

pub use config::{AnyConfig, HypercubeConfig, LatticeConfig, PathZ};
pub use error::{Error, Result};
pub use rates::JumpRates;
