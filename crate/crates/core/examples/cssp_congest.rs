//! Exact closest-source shortest paths in CONGEST on random weighted
//! graphs, zero weights included.

use sleepy::cssp::{cssp, CsspOptions};
use sleepy::graph::{gen_graph, Family, GraphSpec, WeightMode};
use sleepy::oracle::dijkstra;

fn main() -> sleepy::Result<()> {
    let cases = [
        ("uniform", WeightMode::Uniform { max: 1000 }),
        ("zero-heavy", WeightMode::ZeroHeavy { zero_fraction: 0.4, max: 1000 }),
    ];
    for (name, weights) in cases {
        for n in [32, 64, 128] {
            let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: 3 * n }, n, weights, 7))?;
            let sources = [0, n / 2];
            let run = cssp(&g, &sources, &CsspOptions::default())?;
            println!(
                "{name} n={n}: exact {} rounds {} max congestion {} frames {}",
                run.dist == dijkstra(&g, &sources),
                run.report.rounds,
                run.report.max_congestion(),
                run.trace.frames_run
            );
        }
    }
    Ok(())
}
