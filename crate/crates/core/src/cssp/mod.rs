//! Closest-source shortest paths in the CONGEST model by thresholded
//! recursion: cut at half the threshold with a rounding cutter, solve the
//! near side, then solve the far side from imaginary sources on the cut.
//!
//! Each step of a frame is one engine run; the runs of a whole computation
//! share a [`Session`], so rounds and per-edge counts add up exactly.

pub mod programs;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{boruvka_forest, Forest};
use crate::graph::{Graph, NodeId};
use crate::oracle::{threshold, DistanceMap};
use crate::sim::{Model, RunReport, Session, SimConfig};

use programs::{BarrierExchange, BaseCase, CutInput, Cutter};

/// A live recursion frame.
#[derive(Clone, Debug)]
pub struct SubproblemCtx {
    /// Recursion path with a leading one bit: children are `2id` and `2id+1`.
    pub id: u64,
    pub active: Vec<bool>,
    /// Source offsets: `Some(0)` for a real source, `Some(o)` for an imaginary
    /// source attached at distance `o`.
    pub offsets: Vec<Option<u64>>,
    /// Threshold, a power of two.
    pub d: u64,
    /// Per node, a bound on its component size.
    pub size_bound: Vec<u64>,
}

impl SubproblemCtx {
    pub fn top(g: &Graph, sources: &[NodeId], d: u64) -> Self {
        let mut offsets = vec![None; g.n()];
        for &s in sources {
            offsets[s] = Some(0);
        }
        SubproblemCtx { id: 1, active: vec![true; g.n()], offsets, d, size_bound: vec![g.n() as u64; g.n()] }
    }

    pub fn level(&self) -> u32 {
        self.d.trailing_zeros()
    }

    pub fn is_empty(&self) -> bool {
        !self.active.iter().any(|&a| a)
    }
}

/// One node's view of a cutter invocation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutterEntry {
    pub v: NodeId,
    pub offset: Option<u64>,
    /// Component size `c`; one tick is `d / (2c)`.
    pub comp_size: u64,
    pub ticks: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutterRecord {
    pub frame: u64,
    pub d: u64,
    /// Active nodes only.
    pub nodes: Vec<CutterEntry>,
}

impl CutterRecord {
    /// `dist' = ticks * d / (2c)` as an exact fraction `(num, den)`.
    pub fn approx(e: &CutterEntry, d: u64) -> Option<(u128, u128)> {
        e.ticks.map(|t| (t as u128 * d as u128, 2 * e.comp_size as u128))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub id: u64,
    pub d: u64,
    /// `(node, offset, output)` for active nodes.
    pub nodes: Vec<(NodeId, Option<u64>, Option<u64>)>,
}

/// Instrumentation gathered during a run.
#[derive(Clone, Debug, Default)]
pub struct CsspTrace {
    /// `appearances[v][level]`: frames at threshold `2^level` containing `v`.
    pub appearances: Vec<Vec<u32>>,
    pub top_d: u64,
    pub cutters: Vec<CutterRecord>,
    pub frames: Vec<FrameRecord>,
    pub frames_run: u64,
}

impl CsspTrace {
    pub(crate) fn new(n: usize, top_d: u64) -> Self {
        CsspTrace {
            appearances: vec![vec![0; top_d.trailing_zeros() as usize + 1]; n],
            top_d,
            ..Default::default()
        }
    }

    /// Nodes exceeding 3 frames on a level or `3(log2 D + 1)` in total.
    pub fn appearance_violations(&self) -> Vec<(NodeId, String)> {
        let total_bound = 3 * (self.top_d.trailing_zeros() + 1);
        let mut out = Vec::new();
        for (v, levels) in self.appearances.iter().enumerate() {
            for (l, &c) in levels.iter().enumerate() {
                if c > 3 {
                    out.push((v, format!("{c} frames at threshold 2^{l}")));
                }
            }
            let total: u32 = levels.iter().sum();
            if total > total_bound {
                out.push((v, format!("{total} frames in total, bound {total_bound}")));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CsspOptions {
    pub round_limit: u64,
    pub c_msg: u32,
    /// The barrier start is `start_gap * |C|` rounds ahead.
    pub start_gap: u64,
    /// Keep per-frame and per-cutter records.
    pub record: bool,
    /// Record every send in the session trace.
    pub trace: bool,
    /// Instance id charged on every message.
    pub instance: Option<u64>,
}

impl Default for CsspOptions {
    fn default() -> Self {
        CsspOptions { round_limit: u64::MAX / 4, c_msg: crate::sim::DEFAULT_C_MSG, start_gap: 4, record: false, trace: false, instance: None }
    }
}

/// The steps of a frame, implemented per model.
pub(crate) trait Steps {
    fn base_case(&mut self, s: &mut Session, f: &SubproblemCtx) -> Result<DistanceMap>;
    fn forest(&mut self, s: &mut Session, f: &SubproblemCtx) -> Result<Forest>;
    /// Cutter ticks per active node.
    fn cutter(&mut self, s: &mut Session, f: &SubproblemCtx, forest: &Forest) -> Result<Vec<Option<u64>>>;
    /// Barrier then cut exchange; returns the second call's offsets.
    fn barrier_exchange(&mut self, s: &mut Session, f: &SubproblemCtx, forest: &Forest, cut: &[CutInput], gap: u64)
        -> Result<Vec<Option<u64>>>;
}

pub(crate) struct CongestSteps;

impl Steps for CongestSteps {
    fn base_case(&mut self, s: &mut Session, f: &SubproblemCtx) -> Result<DistanceMap> {
        let g = s.graph;
        let out = s.run(1, |v| BaseCase::new(g, &f.active, &f.offsets, v, f.id))?;
        Ok(out.programs.into_iter().map(|p| p.output).collect())
    }

    fn forest(&mut self, s: &mut Session, f: &SubproblemCtx) -> Result<Forest> {
        boruvka_forest(s, &f.active, &f.size_bound, f.id)
    }

    fn cutter(&mut self, s: &mut Session, f: &SubproblemCtx, forest: &Forest) -> Result<Vec<Option<u64>>> {
        let g = s.graph;
        let out = s.run(1, |v| Cutter::new(g, &f.active, &f.offsets, forest, f.d, v, f.id))?;
        Ok(out.programs.into_iter().map(|p| p.ticks).collect())
    }

    fn barrier_exchange(
        &mut self,
        s: &mut Session,
        f: &SubproblemCtx,
        forest: &Forest,
        cut: &[CutInput],
        gap: u64,
    ) -> Result<Vec<Option<u64>>> {
        let g = s.graph;
        let clock = s.clock();
        let half = f.d / 2;
        let out = s.run(1, |v| BarrierExchange::new(g, &f.active, forest, v, cut[v], half, gap, clock, f.id))?;
        Ok(out.programs.into_iter().map(|p| p.new_offset).collect())
    }
}

pub(crate) struct Recursion<'o, S: Steps> {
    pub steps: S,
    pub opts: &'o CsspOptions,
    pub trace: CsspTrace,
}

impl<S: Steps> Recursion<'_, S> {
    pub fn solve(&mut self, s: &mut Session, f: &SubproblemCtx) -> Result<DistanceMap> {
        let n = f.active.len();
        if f.is_empty() {
            return Ok(vec![None; n]);
        }
        self.trace.frames_run += 1;
        let level = f.level() as usize;
        for v in (0..n).filter(|&v| f.active[v]) {
            if let Some(c) = self.trace.appearances[v].get_mut(level) {
                *c += 1;
            }
        }
        let out = if f.d <= 1 { self.steps.base_case(s, f)? } else { self.recurse(s, f)? };
        if self.opts.record {
            self.trace.frames.push(FrameRecord {
                id: f.id,
                d: f.d,
                nodes: (0..n).filter(|&v| f.active[v]).map(|v| (v, f.offsets[v], out[v])).collect(),
            });
        }
        Ok(out)
    }

    fn recurse(&mut self, s: &mut Session, f: &SubproblemCtx) -> Result<DistanceMap> {
        let n = f.active.len();
        let forest = self.steps.forest(s, f)?;
        let ticks = self.steps.cutter(s, f, &forest)?;
        if self.opts.record {
            self.trace.cutters.push(CutterRecord {
                frame: f.id,
                d: f.d,
                nodes: (0..n)
                    .filter(|&v| f.active[v])
                    .map(|v| CutterEntry { v, offset: f.offsets[v], comp_size: forest.size[v], ticks: ticks[v] })
                    .collect(),
            });
        }
        let half = f.d / 2;
        let near_set: Vec<bool> = (0..n).map(|v| f.active[v] && ticks[v].is_some_and(|t| t < 3 * forest.size[v])).collect();
        let first = SubproblemCtx {
            id: f.id * 2,
            active: near_set.clone(),
            offsets: f.offsets.clone(),
            d: half,
            size_bound: forest.size.clone(),
        };
        let out1 = self.solve(s, &first)?;
        let cut: Vec<CutInput> = (0..n)
            .map(|v| CutInput { near: out1[v], far: near_set[v] && out1[v].is_none(), old_offset: f.offsets[v] })
            .collect();
        let offsets2 = self.steps.barrier_exchange(s, f, &forest, &cut, self.opts.start_gap)?;
        let second = SubproblemCtx {
            id: f.id * 2 + 1,
            active: cut.iter().map(|c| c.far).collect(),
            offsets: offsets2,
            d: half,
            size_bound: forest.size.clone(),
        };
        let out2 = self.solve(s, &second)?;
        Ok((0..n).map(|v| out1[v].or(out2[v].map(|x| x + half))).collect())
    }
}

/// One rounding-cutter invocation (with `eps = 1/2`, `W = ctx.d`) on a
/// fresh forest of the frame. `dist'` of each node is
/// [`CutterRecord::approx`] of its entry.
pub fn approx_cutter(g: &Graph, ctx: &SubproblemCtx, opts: &CsspOptions) -> Result<(CutterRecord, RunReport)> {
    check_positive(g)?;
    let mut s = Session::new(g, config(g, Model::Congest, opts));
    let forest = CongestSteps.forest(&mut s, ctx)?;
    let ticks = CongestSteps.cutter(&mut s, ctx, &forest)?;
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

/// Zero weights become 1, positive weights `w` become `n * w`.
pub fn lift_zero_weights(g: &Graph) -> Graph {
    let n = g.n() as u64;
    g.map_weights(|w| if w == 0 { 1 } else { n * w }, g.weight_exponent() + 1)
}

/// Distance in the original graph from a distance in the lifted one.
pub fn project_distance(x: Option<u64>, n: usize) -> Option<u64> {
    x.map(|x| x / n as u64)
}

/// Smallest power of two at least `n * maxW` (and at least 1).
pub fn top_threshold(g: &Graph) -> u64 {
    (g.n() as u64 * g.max_weight()).max(1).next_power_of_two()
}

pub struct CsspRun {
    pub dist: DistanceMap,
    pub report: RunReport,
    pub trace: CsspTrace,
    /// `(round, from, to)` of every send when [`CsspOptions::trace`] is set.
    pub sends: Vec<(u64, NodeId, NodeId)>,
}

/// Thresholded CSSP on `g` (weights at least 1) from a given frame.
/// Thresholds that are not powers of two run at the next power of two.
pub fn thresholded_cssp(g: &Graph, ctx: &SubproblemCtx, opts: &CsspOptions) -> Result<CsspRun> {
    check_positive(g)?;
    let mut s = Session::new(g, config(g, Model::Congest, opts));
    let frame = pow2_frame(ctx);
    let mut rec = Recursion { steps: CongestSteps, opts, trace: CsspTrace::new(g.n(), frame.d) };
    let dist = threshold(&rec.solve(&mut s, &frame)?, ctx.d);
    let sends = std::mem::take(&mut s.trace);
    Ok(CsspRun { dist, report: s.finish(), trace: rec.trace, sends })
}

/// The frame with its threshold rounded up to a power of two; the
/// recursion halves it down to 1.
pub(crate) fn pow2_frame(ctx: &SubproblemCtx) -> SubproblemCtx {
    SubproblemCtx { d: ctx.d.max(1).next_power_of_two(), ..ctx.clone() }
}

pub(crate) fn check_positive(g: &Graph) -> Result<()> {
    if g.has_zero_weight() {
        return Err(Error::Spec("thresholded recursion needs weights of at least 1".into()));
    }
    Ok(())
}

pub(crate) fn config(budget_graph: &Graph, model: Model, opts: &CsspOptions) -> SimConfig {
    let mut c = SimConfig::new(model, crate::sim::bit_budget(budget_graph.n(), budget_graph.max_weight(), opts.c_msg));
    c.round_limit = opts.round_limit;
    c.record_trace = opts.trace;
    c.instance = opts.instance;
    if opts.instance.is_some() {
        c.bit_budget += opts.c_msg * crate::decomp::log_n(budget_graph.n()) as u32;
    }
    c
}

/// Exact closest-source distances; zero weights are lifted and projected back.
pub fn cssp(g: &Graph, sources: &[NodeId], opts: &CsspOptions) -> Result<CsspRun> {
    cssp_with(g, sources, opts, Model::Congest, |work, ctx, s, opts| {
        let mut rec = Recursion { steps: CongestSteps, opts, trace: CsspTrace::new(work.n(), ctx.d) };
        let dist = rec.solve(s, ctx)?;
        Ok((dist, rec.trace))
    })
}

pub(crate) fn cssp_with(
    g: &Graph,
    sources: &[NodeId],
    opts: &CsspOptions,
    model: Model,
    mut solve: impl FnMut(&Graph, &SubproblemCtx, &mut Session, &CsspOptions) -> Result<(DistanceMap, CsspTrace)>,
) -> Result<CsspRun> {
    if sources.is_empty() {
        return Err(Error::Spec("source set is empty".into()));
    }
    if let Some(&s) = sources.iter().find(|&&s| s >= g.n()) {
        return Err(Error::Spec(format!("source {s} out of range")));
    }
    let lifted = g.has_zero_weight();
    let work = if lifted { lift_zero_weights(g) } else { g.clone() };
    let ctx = SubproblemCtx::top(&work, sources, top_threshold(&work));
    let mut s = Session::new(&work, config(g, model, opts));
    let (dist, trace) = solve(&work, &ctx, &mut s, opts)?;
    let dist = if lifted { dist.into_iter().map(|x| project_distance(x, g.n())).collect() } else { dist };
    let sends = std::mem::take(&mut s.trace);
    Ok(CsspRun { dist, report: s.finish(), trace, sends })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_graph, Edge, Family, GraphSpec, WeightMode};
    use crate::oracle::{check_cutter, check_frame, dijkstra, reference_thresholded};

    fn p3() -> Graph {
        Graph::new(3, vec![Edge { u: 0, v: 1, w: 2 }, Edge { u: 1, v: 2, w: 3 }]).unwrap()
    }

    #[test]
    fn p3_threshold_four() {
        let g = p3();
        let run = thresholded_cssp(&g, &SubproblemCtx::top(&g, &[0], 4), &CsspOptions::default()).unwrap();
        assert_eq!(run.dist, vec![Some(0), Some(2), None]);
    }

    #[test]
    fn star_base_case() {
        let edges = (1..5).map(|v| Edge { u: 0, v, w: 1 }).collect();
        let g = Graph::new(5, edges).unwrap();
        let run = thresholded_cssp(&g, &SubproblemCtx::top(&g, &[0], 1), &CsspOptions::default()).unwrap();
        assert_eq!(run.dist, vec![Some(0), Some(1), Some(1), Some(1), Some(1)]);
        assert_eq!(run.report.rounds, 1);
    }

    #[test]
    fn cutter_rounds_p2() {
        let g = Graph::new(2, vec![Edge { u: 0, v: 1, w: 7 }]).unwrap();
        let (rec, _) = approx_cutter(&g, &SubproblemCtx::top(&g, &[0], 8), &CsspOptions::default()).unwrap();
        assert_eq!(CutterRecord::approx(&rec.nodes[0], 8), Some((0, 4)));
        // 4 ticks of 8/4 = 2
        assert_eq!(CutterRecord::approx(&rec.nodes[1], 8), Some((32, 4)));
        assert!(check_cutter(&g, &rec).is_empty());
    }

    #[test]
    fn cutter_far_node_is_infinite() {
        let g = gen_graph(&GraphSpec::new(Family::Path, 40, WeightMode::Unit, 0)).unwrap();
        let (rec, _) = approx_cutter(&g, &SubproblemCtx::top(&g, &[0], 8), &CsspOptions::default()).unwrap();
        assert_eq!(rec.nodes[23].ticks, Some(230));
        assert_eq!(rec.nodes[24].ticks, None);
        assert!(check_cutter(&g, &rec).is_empty());
    }

    #[test]
    fn lift_and_project() {
        let g = Graph::new(2, vec![Edge { u: 0, v: 1, w: 0 }]).unwrap();
        assert_eq!(lift_zero_weights(&g).edges()[0].w, 1);
        let g = Graph::new(2, vec![Edge { u: 0, v: 1, w: 3 }]).unwrap();
        assert_eq!(lift_zero_weights(&g).edges()[0].w, 6);
        assert_eq!(project_distance(Some(1), 2), Some(0));
        assert_eq!(project_distance(Some(6), 2), Some(3));
        assert_eq!(project_distance(None, 2), None);
    }

    #[test]
    fn random_graphs_match_dijkstra() {
        let opts = CsspOptions { record: true, ..Default::default() };
        for seed in 0..25 {
            let n = 10 + (seed as usize * 5) % 40;
            let weights = if seed % 3 == 0 {
                WeightMode::ZeroHeavy { zero_fraction: 0.3, max: 20 }
            } else {
                WeightMode::Uniform { max: 1000 }
            };
            let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: n + n / 3 }, n, weights, seed)).unwrap();
            let src = [seed as usize % n];
            let run = cssp(&g, &src, &opts).unwrap();
            assert_eq!(run.dist, dijkstra(&g, &src), "seed {seed}");
            assert!(run.trace.appearance_violations().is_empty(), "seed {seed}");
            let work = if g.has_zero_weight() { lift_zero_weights(&g) } else { g.clone() };
            for c in &run.trace.cutters {
                assert!(check_cutter(&work, c).is_empty(), "seed {seed}");
            }
            for f in &run.trace.frames {
                assert!(check_frame(&work, f).is_empty(), "seed {seed}");
            }
        }
    }

    #[test]
    fn thresholded_matches_reference() {
        let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: 60 }, 30, WeightMode::Uniform { max: 9 }, 3)).unwrap();
        for d in [1, 2, 4, 8, 16, 32] {
            let run = thresholded_cssp(&g, &SubproblemCtx::top(&g, &[0, 5], d), &CsspOptions::default()).unwrap();
            assert_eq!(run.dist, reference_thresholded(&g, &[0, 5], d), "d {d}");
        }
    }
}
