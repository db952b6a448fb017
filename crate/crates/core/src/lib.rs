//! Partially observable Markov chains with rewinding.
//!
//! A rewinding strategy may restart the chain from any state it has already
//! visited, so its samples form a tree rather than a single trajectory. This
//! crate models such chains, runs strategies against them, plans
//! non-adaptive state identification through the lattice of state
//! partitions, and ships exact oracles that small instances can be checked
//! against.
//!
//! Modules, bottom up:
//!
//! * [`chain`]: chains, validation, the example builders and the JSON format.
//! * [`simulate`]: query trees, strategy runners and exact observation laws.
//! * [`partition`]: projected distances, pair tests and component refinement.
//! * [`plan`]: the partition graph, shortest paths and the planned classifier.
//! * [`gap`]: the adaptive algorithm for the gap chain and decoupling bounds.
//! * [`reduce`]: the canonical reduction and its strategy emulators.
//! * [`strategies`] and [`experiment`]: concrete strategies and seeded runners.

pub mod chain;
pub mod experiment;
pub mod gap;
pub mod partition;
pub mod plan;
pub mod reduce;
pub mod simulate;
pub mod strategies;

pub use chain::{PoMarkovChain, StateId, Symbol};
pub use partition::Partition;
pub use simulate::{QueryTree, TreeShape, Verdict};
