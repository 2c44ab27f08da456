//! Random regular graphs, cycle-deletion decompositions and certified
//! asymptotic-embedding kernels.

pub mod classifier;
pub mod decomposition;
pub mod embedding;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod kernel;
pub mod linalg;
pub mod random_regular;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{parse_graph, Graph};
