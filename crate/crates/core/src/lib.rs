//! Round-synchronous simulation of the CONGEST and sleeping models, with
//! deterministic shortest-path, cover, decomposition and low-energy BFS
//! algorithms running as per-node programs, plus sequential oracles.

pub mod apsp;
pub mod cli;
pub mod cover;
pub mod cover_bfs;
pub mod cssp;
pub mod decomp;
pub mod energy_bfs;
pub mod energy_cssp;
pub mod error;
pub mod forest;
pub mod graph;
pub mod oracle;
pub mod pipeline;
pub mod sim;
pub mod suite;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId, Weight};
pub use sim::{run_simulation, RunReport, SimConfig};
