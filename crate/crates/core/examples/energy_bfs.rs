//! Low-energy BFS on paths: rounds, the busiest node's awake rounds, and
//! a check against the sequential BFS.

use sleepy::energy_bfs::{full_bfs, BfsOptions};
use sleepy::graph::{gen_graph, Family, GraphSpec, WeightMode};
use sleepy::oracle::bfs;

fn main() -> sleepy::Result<()> {
    for d in [32, 64, 128, 256] {
        let g = gen_graph(&GraphSpec::new(Family::Path, d + 1, WeightMode::Unit, 0))?;
        let run = full_bfs(&g, &[0], &BfsOptions::default())?;
        println!(
            "D={d}: exact {} base {} levels {} rounds {} max energy {} (all-awake bootstrap {})",
            run.dist == bfs(&g, &[0]),
            run.layered.base,
            run.layered.levels.len(),
            run.report.rounds,
            run.report.max_energy(),
            run.bootstrap_rounds
        );
    }
    Ok(())
}
