//! All-pairs shortest paths from n CSSP instances started at random
//! delays, with the schedule's dilation against a single instance.

use sleepy::apsp::{apsp_random_delay, ApspOptions};
use sleepy::graph::{gen_graph, Family, GraphSpec, WeightMode};
use sleepy::oracle::dijkstra;

fn main() -> sleepy::Result<()> {
    let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: 64 }, 32, WeightMode::Uniform { max: 100 }, 5))?;
    for delta in [1, 8, 32, 128] {
        let run = apsp_random_delay(&g, &ApspOptions { delta: Some(delta), seed: 11, ..Default::default() })?;
        let exact = (0..g.n()).all(|s| run.dist[s] == dijkstra(&g, &[s]));
        let st = &run.stats;
        println!(
            "delta={delta}: exact {exact} single {} makespan {} widest megaround {} fitted c {:.2}",
            st.single_rounds, st.makespan, st.max_demand, st.fitted_c
        );
    }
    Ok(())
}
