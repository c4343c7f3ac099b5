//! Closest-source shortest paths in the sleeping model: the thresholded
//! recursion of [`crate::cssp`] with low-energy steps. The forest comes from
//! [`spanning_forest_energy`], the cutter is a thresholded cover BFS on the
//! tick view of the frame, and the barrier is a pipelined tree cycle.

mod forest;

pub use forest::{lex_min, spanning_forest_energy};

use crate::cover_bfs::Seed;
use crate::cssp::programs::{ticks_for, BaseCase, CutInput};
use crate::cssp::{
    check_positive, config, cssp_with, pow2_frame, CsspOptions, CsspRun, CsspTrace, CutterEntry, CutterRecord, Recursion, Steps,
    SubproblemCtx,
};
use crate::decomp::Mode;
use crate::energy_bfs::{thresholded_bfs_in, BfsOptions};
use crate::error::Result;
use crate::forest::{active_nbrs, Forest};
use crate::graph::{Edge, Graph, NodeId};
use crate::oracle::{threshold, DistanceMap};
use crate::pipeline::{self, Tree};
use crate::sim::{Model, RunReport, Session};

#[derive(Clone, Debug, Default)]
pub struct EnergyOptions {
    pub cssp: CsspOptions,
    /// Cover base and window mode of the cutter BFS; `mode` also sets the
    /// tree windows.
    pub bfs: BfsOptions,
}

/// The frame's active subgraph with every edge replaced by a chain of
/// ticks. A chain of length `a` is one edge of length `a` here; the wave
/// crosses it `a` rounds after entering it, driven by the endpoint it
/// entered from, so only the physical edge carries messages.
#[derive(Clone, Debug)]
pub struct SubdividedView {
    pub graph: Graph,
    /// Node `i` of the view is `nodes[i]` in the frame's graph.
    pub nodes: Vec<NodeId>,
    /// Edge `e` of the view is `edges[e]` in the frame's graph.
    pub edges: Vec<usize>,
}

impl SubdividedView {
    /// Ticks of `d / (2c)` per edge, `c` the component size; chains of
    /// `horizon` ticks or more are left out, since no wave crosses them.
    pub fn new(g: &Graph, active: &[bool], forest: &Forest, d: u64) -> Self {
        let nodes: Vec<NodeId> = (0..g.n()).filter(|&v| active[v]).collect();
        let mut index = vec![usize::MAX; g.n()];
        for (i, &v) in nodes.iter().enumerate() {
            index[v] = i;
        }
        let mut edges = Vec::new();
        for (i, &v) in nodes.iter().enumerate() {
            let c = forest.size[v].max(1);
            for (u, w) in active_nbrs(g, active, v) {
                let a = ticks_for(w, c, d);
                if v < u && a < 6 * c {
                    edges.push(Edge { u: i, v: index[u], w: a });
                }
            }
        }
        let graph = Graph::from_raw(nodes.len(), edges, g.weight_exponent());
        let edges = graph
            .edges()
            .iter()
            .map(|e| g.edge_between(nodes[e.u], nodes[e.v]).expect("view edge exists"))
            .collect();
        SubdividedView { graph, nodes, edges }
    }
}

/// Tick counts of the rounding cutter (`eps = 1/2`, `W = f.d`) as a cover
/// BFS of `6c` ticks on the subdivided view, charged to `s`.
pub fn approx_cutter_energy(s: &mut Session, f: &SubproblemCtx, forest: &Forest, bfs: &BfsOptions) -> Result<Vec<Option<u64>>> {
    let g = s.graph;
    let view = SubdividedView::new(g, &f.active, forest, f.d);
    let horizon = |v: NodeId| 6 * forest.size[v].max(1);
    let mut out = vec![None; g.n()];
    if view.nodes.is_empty() {
        return Ok(out);
    }
    let seeds: Vec<Option<Seed>> = view
        .nodes
        .iter()
        .map(|&v| {
            let t = f.offsets[v].map(|o| ticks_for(o, forest.size[v].max(1), f.d))?;
            (t < horizon(v)).then_some(Seed { label: 0, offset: t, hops: 0 })
        })
        .collect();
    let threshold = view.nodes.iter().map(|&v| horizon(v)).max().unwrap_or(1) - 1;
    let mut cfg = s.config.clone();
    cfg.round_limit = s.config.round_limit.saturating_sub(s.report.rounds);
    let mut sub = Session::new(&view.graph, cfg);
    let reach = if seeds.iter().any(Option::is_some) {
        thresholded_bfs_in(&mut sub, &seeds, threshold, bfs)?
    } else {
        vec![None; view.nodes.len()]
    };
    s.absorb_mapped(&sub.finish(), &view.nodes, &view.edges);
    for (i, &v) in view.nodes.iter().enumerate() {
        out[v] = reach[i].map(|r| r.dist).filter(|&t| t < horizon(v));
    }
    Ok(out)
}

pub(crate) struct EnergySteps<'o> {
    pub bfs: &'o BfsOptions,
}

impl EnergySteps<'_> {
    fn window(&self, t: &Tree, forest: &Forest) -> u64 {
        match self.bfs.mode {
            Mode::Worst => t.window().max((0..t.on.len()).filter(|&v| t.on[v]).map(|v| forest.size[v]).max().unwrap_or(1)),
            Mode::Scaled => t.window(),
        }
    }
}

impl Steps for EnergySteps<'_> {
    fn base_case(&mut self, s: &mut Session, f: &SubproblemCtx) -> Result<DistanceMap> {
        let g = s.graph;
        let out = s.run(1, |v| BaseCase::new(g, &f.active, &f.offsets, v, f.id))?;
        Ok(out.programs.into_iter().map(|p| p.output).collect())
    }

    fn forest(&mut self, s: &mut Session, f: &SubproblemCtx) -> Result<Forest> {
        spanning_forest_energy(s, &f.active, &f.size_bound, self.bfs.mode, f.id)
    }

    fn cutter(&mut self, s: &mut Session, f: &SubproblemCtx, forest: &Forest) -> Result<Vec<Option<u64>>> {
        approx_cutter_energy(s, f, forest, self.bfs)
    }

    /// Done reports climb the tree in slots of period `|C|`, the start
    /// round comes back down, and the start round is one exchange.
    fn barrier_exchange(&mut self, s: &mut Session, f: &SubproblemCtx, forest: &Forest, cut: &[CutInput], _gap: u64)
        -> Result<Vec<Option<u64>>> {
        let g = s.graph;
        let n = g.n();
        let half = f.d / 2;
        let mut t = Tree::from_forest(forest);
        for v in 0..n {
            t.on[v] = f.active[v];
        }
        let w = self.window(&t, forest);
        let own = (0..n).map(|v| if f.active[v] { vec![1] } else { vec![] }).collect();
        pipeline::allreduce(s, &t, w, own, &pipeline::sum_combine, f.id)?;
        // nodes beyond the cutter's reach are neither near nor far but
        // still hear their near neighbours
        let awake = &f.active;
        let msgs = (0..n)
            .map(|v| match cut[v].near {
                Some(d) if f.active[v] => active_nbrs(g, &f.active, v).into_iter().map(|(u, _)| (u, vec![d])).collect(),
                _ => Vec::new(),
            })
            .collect();
        let heard = pipeline::exchange(s, awake, msgs, f.id)?;
        Ok((0..n)
            .map(|v| {
                if !cut[v].far {
                    return None;
                }
                let mut best = cut[v].old_offset.filter(|&o| o > half).map(|o| o - half);
                for (u, x) in &heard[v] {
                    let w = g.edge_between(v, *u).map_or(0, |e| g.edges()[e].w);
                    let o = x[0] + w - half;
                    best = Some(best.map_or(o, |b| b.min(o)));
                }
                best
            })
            .collect())
    }
}

/// Thresholded CSSP in the sleeping model from a given frame; thresholds
/// that are not powers of two run at the next power of two.
pub fn thresholded_cssp_energy(g: &Graph, ctx: &SubproblemCtx, opts: &EnergyOptions) -> Result<CsspRun> {
    check_positive(g)?;
    let mut s = Session::new(g, config(g, Model::Sleeping, &opts.cssp));
    let frame = pow2_frame(ctx);
    let mut rec = Recursion { steps: EnergySteps { bfs: &opts.bfs }, opts: &opts.cssp, trace: CsspTrace::new(g.n(), frame.d) };
    let dist = threshold(&rec.solve(&mut s, &frame)?, ctx.d);
    let sends = std::mem::take(&mut s.trace);
    Ok(CsspRun { dist, report: s.finish(), trace: rec.trace, sends })
}

/// Exact closest-source distances in the sleeping model.
pub fn cssp_energy(g: &Graph, sources: &[NodeId], opts: &EnergyOptions) -> Result<CsspRun> {
    cssp_with(g, sources, &opts.cssp, Model::Sleeping, |work, ctx, s, copts| {
        let mut rec = Recursion { steps: EnergySteps { bfs: &opts.bfs }, opts: copts, trace: CsspTrace::new(work.n(), ctx.d) };
        let dist = rec.solve(s, ctx)?;
        Ok((dist, rec.trace))
    })
}

/// One energy cutter invocation on a fresh forest of the frame.
pub fn approx_cutter_energy_record(g: &Graph, ctx: &SubproblemCtx, opts: &EnergyOptions) -> Result<(CutterRecord, RunReport)> {
    check_positive(g)?;
    let mut s = Session::new(g, config(g, Model::Sleeping, &opts.cssp));
    let forest = spanning_forest_energy(&mut s, &ctx.active, &ctx.size_bound, opts.bfs.mode, ctx.id)?;
    let ticks = approx_cutter_energy(&mut s, ctx, &forest, &opts.bfs)?;
    let rec = CutterRecord {
        frame: ctx.id,
        d: ctx.d,
        nodes: (0..g.n())
            .filter(|&v| ctx.active[v])
            .map(|v| CutterEntry { v, offset: ctx.offsets[v], comp_size: forest.size[v], ticks: ticks[v] })
            .collect(),
    };
    Ok((rec, s.finish()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_graph, shapes, Family, GraphSpec, WeightMode};
    use crate::oracle::{check_cutter, check_forest, dijkstra};
    use crate::sim::SimConfig;

    #[test]
    fn p3_thresholded_at_four() {
        let g = Graph::new(3, vec![Edge { u: 0, v: 1, w: 2 }, Edge { u: 1, v: 2, w: 3 }]).unwrap();
        let run = thresholded_cssp_energy(&g, &SubproblemCtx::top(&g, &[0], 4), &EnergyOptions::default()).unwrap();
        assert_eq!(run.dist, vec![Some(0), Some(2), None]);
    }

    #[test]
    fn single_long_edge() {
        let g = Graph::new(2, vec![Edge { u: 0, v: 1, w: 7 }]).unwrap();
        let run = cssp_energy(&g, &[0], &EnergyOptions::default()).unwrap();
        assert_eq!(run.dist, vec![Some(0), Some(7)]);
    }

    #[test]
    fn matches_dijkstra_with_zero_weights() {
        for seed in 0..3 {
            let spec = GraphSpec::new(Family::RandomGnm { m: 40 }, 24, WeightMode::ZeroHeavy { zero_fraction: 0.3, max: 60 }, seed);
            let g = gen_graph(&spec).unwrap();
            let run = cssp_energy(&g, &[0, 11], &EnergyOptions::default()).unwrap();
            assert_eq!(run.dist, dijkstra(&g, &[0, 11]), "seed {seed}");
        }
    }

    #[test]
    fn cutter_meets_its_contract() {
        let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: 45 }, 30, WeightMode::Uniform { max: 20 }, 4)).unwrap();
        for d in [8, 32, 128] {
            let ctx = SubproblemCtx::top(&g, &[0, 9], d);
            let (rec, report) = approx_cutter_energy_record(&g, &ctx, &EnergyOptions::default()).unwrap();
            assert!(check_cutter(&g, &rec).is_empty(), "d {d}");
            assert_eq!(report.bit_violations, 0);
        }
    }

    #[test]
    fn subdivided_view_keeps_short_chains() {
        let g = shapes::path_of_cliques(3, 3, 5);
        let n = g.n();
        let active = vec![true; n];
        let mut s = Session::new(&g, SimConfig::sleeping(&g));
        let forest = spanning_forest_energy(&mut s, &active, &vec![n as u64; n], Mode::Scaled, 1).unwrap();
        assert!(check_forest(&g, &active, &forest).is_empty());
        let view = SubdividedView::new(&g, &active, &forest, 64);
        assert_eq!(view.nodes.len(), n);
        for (e, &orig) in view.graph.edges().iter().zip(&view.edges) {
            let o = &g.edges()[orig];
            assert_eq!((view.nodes[e.u], view.nodes[e.v]), (o.u.min(o.v), o.u.max(o.v)));
            assert!(e.w < 6 * n as u64);
        }
    }

    #[test]
    fn sleeping_run_is_deterministic() {
        let g = gen_graph(&GraphSpec::new(Family::Grid, 16, WeightMode::Uniform { max: 9 }, 2)).unwrap();
        let a = cssp_energy(&g, &[0], &EnergyOptions::default()).unwrap();
        let b = cssp_energy(&g, &[0], &EnergyOptions::default()).unwrap();
        assert_eq!(a.report.to_json_string(), b.report.to_json_string());
    }
}
