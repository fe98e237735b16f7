//! Subgraph isomorphism by constraint programming with dynamic decomposition.
//!
//! The pattern graph's nodes are CSP variables over target nodes. Search
//! starts with cheap forward checking on a statically chosen variable set and
//! then switches to arc-consistent search that splits the residual network
//! into independent groups whenever their candidate sets no longer overlap.

pub mod bench;
pub mod decomposition;
pub mod generators;
pub mod graph;
pub mod heuristics;
pub mod io;
pub mod model;
pub mod oracle;
pub mod search;

pub use graph::{DirectedGraph, UndirectedView};
pub use model::SipInstance;
pub use search::{solve, Model, ModelConfig, SearchMode, SolveResult, Status};
