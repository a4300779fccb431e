//! Ordering engine built on PQ-trees: simultaneous PQ-ordering for 2-fixed
//! instances together with constrained planarity, SEFE and interval graph
//! applications, each cross-checked by exhaustive oracles.

pub mod embedding;
pub mod expansion;
pub mod gen;
pub mod graph;
pub mod interval;
pub mod instance;
pub mod orders;
pub mod oracle;
pub mod pqtree;
pub mod solver;

pub use orders::{CircularOrder, Label, LinearOrder, Permutation};
pub use pqtree::PQTree;
