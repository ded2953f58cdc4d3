//! Giant j-components of the random k-uniform hypergraph `H^k(n, p)`.
//!
//! Two j-sets are j-connected when a chain of edges links them, consecutive
//! edges sharing at least j vertices. The crate samples hypergraphs, explores
//! j-components breadth first, censuses them with union-find, simulates the
//! litter-valued Galton-Watson processes that sandwich the exploration, and
//! runs reproducible Monte Carlo experiments around the phase transition at
//! `p0 = 1 / ((C(k,j) - 1) * C(n, k-j))`.
//!
//! Modules, bottom up:
//!
//! - [`combinatorics`]: exact binomials, colexicographic ranks, `p0`.
//! - [`sampling`]: seeds, the edge oracle, full edge-set sampling.
//! - [`exploration`]: the component and tree searches with stopping rules.
//! - [`components`]: union-find census, largest components, hypertrees.
//! - [`branching`]: branching-process simulation and the survival solver.
//! - [`smoothness`]: boundary degree profiles, smoothing schedule, arrivals.
//! - [`experiments`]: end-to-end trials, reports and the CLI.

pub mod branching;
pub mod combinatorics;
pub mod components;
pub mod error;
pub mod experiments;
pub mod exploration;
pub mod sampling;
pub mod smoothness;
pub mod stats;

pub use error::{Error, Result};
