//! All-pairs shortest paths: one CONGEST CSSP instance per source, started
//! at random delays and multiplexed over shared edges.
//!
//! Instances share no state, so each is simulated on its own with its sends
//! recorded; the schedule then overlays the traces shifted by their delays.
//! Each logical round of the schedule is a megaround as wide as the largest
//! number of messages any instance mix puts on one directed edge in it.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cssp::{cssp, CsspOptions};
use crate::decomp::log_n;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::oracle::DistanceMap;
use crate::sim::{RunReport, Status};

#[derive(Clone, Debug)]
#[derive(Default)]
pub struct ApspOptions {
    /// Delay range `[0, delta)`; defaults to `n`.
    pub delta: Option<u64>,
    pub seed: u64,
    /// Widest megaround allowed; wider rounds are counted, not fatal.
    pub megaround_cap: Option<u64>,
    pub cssp: CsspOptions,
}


#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledInstance {
    pub source: NodeId,
    pub delay: u64,
    /// Rounds of the instance run alone.
    pub rounds: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationStats {
    pub delta: u64,
    /// Longest single instance.
    pub single_rounds: u64,
    /// Logical rounds of the schedule.
    pub span: u64,
    /// Physical rounds of the schedule.
    pub makespan: u64,
    /// Largest per-round per-edge demand.
    pub max_demand: u64,
    /// Rounds whose demand exceeded the megaround cap.
    pub cap_exceeded: u64,
    /// Largest per-edge total of a single instance.
    pub single_congestion: u64,
    pub congestion: u64,
    /// `makespan / (single_rounds * ceil(log2 n) + delta)`.
    pub fitted_c: f64,
}

#[derive(Clone, Debug)]
pub struct ApspRun {
    /// `dist[s][v]`.
    pub dist: Vec<DistanceMap>,
    pub report: RunReport,
    pub instances: Vec<ScheduledInstance>,
    pub stats: DilationStats,
}

/// Start delays, uniform in `[0, delta)` and fixed by `seed`.
pub fn draw_delays(n: usize, delta: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..delta)).collect()
}

/// Exact distances between all pairs.
pub fn apsp_random_delay(g: &Graph, opts: &ApspOptions) -> Result<ApspRun> {
    let n = g.n();
    let delta = opts.delta.unwrap_or(n as u64).max(1);
    if opts.delta == Some(0) {
        return Err(Error::Spec("delay range must be at least 1".into()));
    }
    let delays = draw_delays(n, delta, opts.seed);
    let mut dist = Vec::with_capacity(n);
    let mut instances = Vec::with_capacity(n);
    let mut report = RunReport::empty(g);
    let mut demand: HashMap<(u64, NodeId, NodeId), u64> = HashMap::new();
    let mut single_congestion = 0;
    let mut span = 0;
    for s in 0..n {
        let copts = CsspOptions { trace: true, instance: Some(s as u64), ..opts.cssp.clone() };
        let run = cssp(g, &[s], &copts)?;
        single_congestion = single_congestion.max(run.report.max_congestion());
        for &(r, a, b) in &run.sends {
            *demand.entry((r + delays[s], a, b)).or_insert(0) += 1;
        }
        span = span.max(delays[s] + run.report.rounds);
        instances.push(ScheduledInstance { source: s, delay: delays[s], rounds: run.report.rounds });
        report.append(&run.report);
        dist.push(run.dist);
    }
    let mut width: HashMap<u64, u64> = HashMap::new();
    for (&(r, _, _), &k) in &demand {
        let w = width.entry(r).or_insert(1);
        *w = (*w).max(k);
    }
    let extra: u64 = width.values().map(|w| w - 1).sum();
    let makespan = span + extra;
    if makespan > opts.cssp.round_limit {
        return Err(Error::Timeout { limit: opts.cssp.round_limit });
    }
    let cap_exceeded = opts.megaround_cap.map_or(0, |cap| width.values().filter(|&&w| w > cap).count() as u64);
    report.rounds = makespan;
    for e in report.energy.iter_mut() {
        *e = makespan;
    }
    report.status = Status::Done;
    let single_rounds = instances.iter().map(|i| i.rounds).max().unwrap_or(0);
    let stats = DilationStats {
        delta,
        single_rounds,
        span,
        makespan,
        max_demand: width.values().copied().max().unwrap_or(0),
        cap_exceeded,
        single_congestion,
        congestion: report.max_congestion(),
        fitted_c: makespan as f64 / (single_rounds * log_n(n) + delta) as f64,
    };
    Ok(ApspRun { dist, report, instances, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_graph, shapes, Edge, Family, GraphSpec, WeightMode};
    use crate::oracle::dijkstra;

    #[test]
    fn single_edge() {
        let g = Graph::new(2, vec![Edge { u: 0, v: 1, w: 5 }]).unwrap();
        let run = apsp_random_delay(&g, &ApspOptions::default()).unwrap();
        assert_eq!(run.dist, vec![vec![Some(0), Some(5)], vec![Some(5), Some(0)]]);
    }

    #[test]
    fn triangle() {
        let g = Graph::new(3, vec![Edge { u: 0, v: 1, w: 1 }, Edge { u: 1, v: 2, w: 2 }, Edge { u: 0, v: 2, w: 4 }]).unwrap();
        let run = apsp_random_delay(&g, &ApspOptions::default()).unwrap();
        assert_eq!(run.dist[0], vec![Some(0), Some(1), Some(3)]);
        assert_eq!(run.dist[1], vec![Some(1), Some(0), Some(2)]);
        assert_eq!(run.dist[2], vec![Some(3), Some(2), Some(0)]);
    }

    #[test]
    fn random_graph_matches_and_fits() {
        let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: 60 }, 32, WeightMode::Uniform { max: 50 }, 4)).unwrap();
        let run = apsp_random_delay(&g, &ApspOptions { seed: 9, ..Default::default() }).unwrap();
        for s in 0..g.n() {
            assert_eq!(run.dist[s], dijkstra(&g, &[s]));
        }
        assert!(run.stats.makespan >= run.stats.single_rounds);
        assert!(run.stats.fitted_c <= 4.0, "{:?}", run.stats);
    }

    #[test]
    fn delays_are_seeded() {
        assert_eq!(draw_delays(10, 7, 3), draw_delays(10, 7, 3));
        assert!(draw_delays(50, 7, 3).iter().all(|&d| d < 7));
        assert_ne!(draw_delays(50, 1000, 3), draw_delays(50, 1000, 4));
    }

    #[test]
    fn instances_are_isolated() {
        let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: 20 }, 12, WeightMode::Uniform { max: 9 }, 2)).unwrap();
        let all = apsp_random_delay(&g, &ApspOptions::default()).unwrap();
        let alone = cssp(&g, &[5], &CsspOptions::default()).unwrap();
        assert_eq!(all.dist[5], alone.dist);
    }

    #[test]
    fn delays_spread_demand_on_star_of_paths() {
        let g = shapes::star_of_paths(6, 5);
        let spread = apsp_random_delay(&g, &ApspOptions { seed: 1, ..Default::default() }).unwrap();
        let packed = apsp_random_delay(&g, &ApspOptions { delta: Some(1), seed: 1, ..Default::default() }).unwrap();
        assert!(spread.stats.max_demand <= packed.stats.max_demand);
    }

    #[test]
    fn zero_delta_is_rejected() {
        let g = Graph::new(2, vec![Edge { u: 0, v: 1, w: 5 }]).unwrap();
        assert!(apsp_random_delay(&g, &ApspOptions { delta: Some(0), ..Default::default() }).is_err());
    }
}
