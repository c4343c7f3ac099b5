//! Invariants of every layer, checked on random graphs against the
//! sequential oracles and checkers.

use proptest::prelude::*;

use sleepy::apsp::{apsp_random_delay, ApspOptions};
use sleepy::cssp::{cssp, lift_zero_weights, thresholded_cssp, CsspOptions, SubproblemCtx};
use sleepy::decomp::{build_decomposition, color_bound, diameter_bound, log_n, Mode};
use sleepy::energy_bfs::{audit_layers, full_bfs, BfsOptions};
use sleepy::energy_cssp::{cssp_energy, spanning_forest_energy, EnergyOptions};
use sleepy::graph::{gen_graph, load_graph, save_graph, Family, Graph, GraphSpec, WeightMode};
use sleepy::oracle::{
    bellman_ford, bfs, check_cutter, check_decomposition, check_forest, check_phases, dijkstra, reference_thresholded,
};
use sleepy::sim::Session;
use sleepy::SimConfig;

fn weights() -> impl Strategy<Value = WeightMode> {
    prop_oneof![
        Just(WeightMode::Unit),
        (1u64..200).prop_map(|max| WeightMode::Uniform { max }),
        (1u64..200).prop_map(|max| WeightMode::ZeroHeavy { zero_fraction: 0.3, max }),
    ]
}

fn family(n: usize) -> impl Strategy<Value = Family> {
    let max_m = n * (n - 1) / 2;
    prop_oneof![
        Just(Family::Path),
        Just(Family::Cycle),
        Just(Family::Grid),
        Just(Family::RandomTree),
        (0..=max_m.min(3 * n)).prop_map(|m| Family::RandomGnm { m }),
    ]
}

/// A random graph with `2 <= n < max_n` and weights below `n^3`.
fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..max_n)
        .prop_flat_map(|n| (Just(n), family(n), weights(), any::<u64>()))
        .prop_map(|(n, f, w, seed)| {
            let w = match w {
                WeightMode::Uniform { max } => WeightMode::Uniform { max: max.min((n as u64).pow(3)) },
                WeightMode::ZeroHeavy { zero_fraction, max } => {
                    WeightMode::ZeroHeavy { zero_fraction, max: max.min((n as u64).pow(3)) }
                }
                u => u,
            };
            gen_graph(&GraphSpec::new(f, n, w, seed)).expect("valid spec")
        })
}

fn positive(g: &Graph) -> Graph {
    if g.has_zero_weight() {
        lift_zero_weights(g)
    } else {
        g.clone()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generation_is_a_function_of_spec(n in 2usize..40, w in weights(), seed in any::<u64>()) {
        let spec = GraphSpec::new(Family::RandomGnm { m: n.min(n * (n - 1) / 2) }, n, w, seed);
        prop_assert_eq!(gen_graph(&spec).ok(), gen_graph(&spec).ok());
    }

    #[test]
    fn save_load_round_trips(g in graph(40)) {
        let text = save_graph(&g);
        let back = load_graph(&text).unwrap();
        prop_assert_eq!(save_graph(&back), text);
        prop_assert_eq!(back, g);
    }

    #[test]
    fn dijkstra_agrees_with_bellman_ford(g in graph(40), s in any::<prop::sample::Index>()) {
        let src = [s.index(g.n())];
        prop_assert_eq!(dijkstra(&g, &src), bellman_ford(&g, &src));
    }

    #[test]
    fn cssp_is_exact_and_accounted(g in graph(40), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let src = [a.index(g.n()), b.index(g.n())];
        let run = cssp(&g, &src, &CsspOptions { record: true, ..Default::default() }).unwrap();
        prop_assert_eq!(&run.dist, &dijkstra(&g, &src));
        prop_assert!(run.trace.appearance_violations().is_empty());
        let work = positive(&g);
        for rec in &run.trace.cutters {
            prop_assert!(check_cutter(&work, rec).is_empty());
        }
        let r = &run.report;
        prop_assert_eq!(r.delivered + r.lost, r.messages);
        prop_assert_eq!(r.bit_violations, 0);
    }

    #[test]
    fn thresholded_cssp_cuts_at_threshold(g in graph(30), d in 1u64..400) {
        let g = positive(&g);
        let run = thresholded_cssp(&g, &SubproblemCtx::top(&g, &[0], d), &CsspOptions::default()).unwrap();
        prop_assert_eq!(run.dist, reference_thresholded(&g, &[0], d));
    }

    #[test]
    fn runs_are_deterministic(g in graph(30)) {
        let a = cssp(&g, &[0], &CsspOptions::default()).unwrap();
        let b = cssp(&g, &[0], &CsspOptions::default()).unwrap();
        prop_assert_eq!(a.report.to_json_string(), b.report.to_json_string());
    }

    #[test]
    fn decompositions_meet_their_bounds(g in graph(40), k in 1u64..6) {
        let n = g.n();
        let h = g.unweighted();
        let build = |h: &Graph| {
            let mut s = Session::new(h, SimConfig::congest(h));
            build_decomposition(&mut s, k, 0, Mode::Scaled).unwrap()
        };
        let (dec, stats) = build(&h);
        prop_assert!(check_decomposition(&h, &dec, diameter_bound(n, k), color_bound(n)).is_empty());
        prop_assert!(check_phases(n, &stats).is_empty());
        prop_assert_eq!(build(&h).0, dec);
    }

    #[test]
    fn apsp_is_exact(g in graph(14), seed in any::<u64>()) {
        let run = apsp_random_delay(&g, &ApspOptions { seed, ..Default::default() }).unwrap();
        for s in 0..g.n() {
            prop_assert_eq!(&run.dist[s], &dijkstra(&g, &[s]));
        }
        prop_assert!(run.stats.makespan >= run.stats.single_rounds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_bfs_is_exact_and_audited(g in graph(48), s in any::<prop::sample::Index>()) {
        let h = g.unweighted();
        let src = [s.index(h.n())];
        let run = full_bfs(&h, &src, &BfsOptions::default()).unwrap();
        prop_assert_eq!(&run.dist, &bfs(&h, &src));
        prop_assert!(audit_layers(&h, &run.layers()).is_empty());
    }

    #[test]
    fn low_energy_forest_spans_active_subgraph(g in graph(64), mask in any::<u64>()) {
        let n = g.n();
        let active: Vec<bool> = (0..n).map(|v| (mask >> (v % 64)) & 1 == 1 || v % 3 == 0).collect();
        let mut s = Session::new(&g, SimConfig::sleeping(&g));
        let f = spanning_forest_energy(&mut s, &active, &vec![n as u64; n], Mode::Scaled, 1).unwrap();
        prop_assert!(check_forest(&g, &active, &f).is_empty());
        // c log^2 n, with log(2n) so the constant also covers tiny n
        let l = log_n(2 * n);
        prop_assert!(s.finish().max_energy() <= 12 * l * l);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn energy_cssp_is_exact(g in graph(20)) {
        let mut opts = EnergyOptions::default();
        opts.cssp.record = true;
        opts.bfs.audit = true;
        let run = cssp_energy(&g, &[0], &opts).unwrap();
        prop_assert_eq!(&run.dist, &dijkstra(&g, &[0]));
        prop_assert!(run.trace.appearance_violations().is_empty());
        let work = positive(&g);
        for rec in &run.trace.cutters {
            prop_assert!(check_cutter(&work, rec).is_empty());
        }
    }
}
