//! Network decomposition and sparse cover of a grid, built by the
//! distributed construction and checked by the sequential checkers.

use sleepy::decomp::{build_cover_sync, color_bound, diameter_bound, Mode};
use sleepy::graph::{gen_graph, Family, GraphSpec, WeightMode};
use sleepy::oracle::{check_cover, check_decomposition, CoverBounds};
use sleepy::sim::Session;
use sleepy::SimConfig;

fn main() -> sleepy::Result<()> {
    let g = gen_graph(&GraphSpec::new(Family::Grid, 100, WeightMode::Unit, 0))?;
    let n = g.n();
    for d in [1, 2, 4] {
        let mut s = Session::new(&g, SimConfig::congest(&g));
        let built = build_cover_sync(&mut s, d, 0, Mode::Scaled)?;
        let dec = &built.decomposition;
        let bad_dec = check_decomposition(&g, dec, diameter_bound(n, dec.separation), color_bound(n));
        let bounds = CoverBounds {
            stretch: 2 * diameter_bound(n, dec.separation) / d + 1,
            node_multiplicity: dec.colors.len(),
            edge_multiplicity: usize::MAX,
        };
        let bad_cover = check_cover(&g, &built.cover, bounds);
        let report = s.finish();
        println!(
            "d={d}: {} colors, {} clusters, cover stretch {:.1}, rounds {}, violations {}",
            dec.colors.len(),
            built.cover.clusters.len(),
            built.cover.stretch(&g),
            report.rounds,
            bad_dec.len() + bad_cover.len()
        );
    }
    Ok(())
}
