//! Closest-source shortest paths in the sleeping model, next to the
//! CONGEST run on the same graph.

use sleepy::cssp::{cssp, CsspOptions};
use sleepy::energy_cssp::{cssp_energy, EnergyOptions};
use sleepy::graph::{gen_graph, Family, GraphSpec, WeightMode};
use sleepy::oracle::dijkstra;

fn main() -> sleepy::Result<()> {
    for n in [16, 32, 48] {
        let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: 2 * n }, n, WeightMode::Uniform { max: 50 }, 3))?;
        let want = dijkstra(&g, &[0]);
        let awake = cssp(&g, &[0], &CsspOptions::default())?;
        let sleeping = cssp_energy(&g, &[0], &EnergyOptions::default())?;
        println!(
            "n={n}: exact {}/{}; congest rounds {} energy {}; sleeping rounds {} energy {}",
            awake.dist == want,
            sleeping.dist == want,
            awake.report.rounds,
            awake.report.max_energy(),
            sleeping.report.rounds,
            sleeping.report.max_energy()
        );
    }
    Ok(())
}
