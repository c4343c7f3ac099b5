//! Spanning forests of the active subgraph: the all-awake Boruvka against
//! the low-energy variant that sleeps between tree cycles.

use sleepy::decomp::Mode;
use sleepy::energy_cssp::spanning_forest_energy;
use sleepy::forest::boruvka_forest;
use sleepy::graph::{gen_graph, Family, GraphSpec, WeightMode};
use sleepy::oracle::check_forest;
use sleepy::sim::{Model, Session};
use sleepy::SimConfig;

fn main() -> sleepy::Result<()> {
    for n in [32, 64, 128, 256] {
        let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: 2 * n }, n, WeightMode::Unit, 1))?;
        let active: Vec<bool> = (0..n).map(|v| v % 7 != 3).collect();
        let p = vec![n as u64; n];

        let mut s = Session::new(&g, SimConfig::new(Model::Congest, sleepy::sim::default_budget(&g)));
        let awake = boruvka_forest(&mut s, &active, &p, 1)?;
        let awake_report = s.finish();

        let mut s = Session::new(&g, SimConfig::sleeping(&g));
        let sleepy = spanning_forest_energy(&mut s, &active, &p, Mode::Scaled, 1)?;
        let sleepy_report = s.finish();

        let ok = check_forest(&g, &active, &awake).is_empty() && check_forest(&g, &active, &sleepy).is_empty();
        println!(
            "n={n}: valid {ok}; boruvka rounds {} energy {}; low-energy rounds {} energy {}",
            awake_report.rounds,
            awake_report.max_energy(),
            sleepy_report.rounds,
            sleepy_report.max_energy()
        );
    }
    Ok(())
}
