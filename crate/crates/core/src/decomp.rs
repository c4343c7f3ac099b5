//! Deterministic network decomposition and sparse covers, built by every
//! node awake in the CONGEST engine.
//!
//! Edge weights of the session graph are lengths: a unit graph gives the
//! usual hop metric. One color is grown over `b = ceil(log2 n)` phases; in
//! phase `i` clusters whose label has bit `i` clear are blue and try to
//! absorb reached red nodes of the same lower-bit class, step by step. A
//! step is a labelled wave of radius `k` from the blue clusters, a count of
//! join requests up the wave tree and then the Steiner tree, the verdict
//! back down both trees, and the Steiner tree growing along wave paths.
//! Rejected requesters die and stay behind as relays.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cover::{edge_tree_multiplicity, Cluster, ClusterId, Cover, Decomposition, TreeSlot};
use crate::error::{Error, Result};
use crate::forest::ceil_log2;
use crate::graph::{Graph, NodeId};
use crate::pipeline::{self, Slot, Tree};
use crate::sim::{Message, Outbox, Program, Session, Wake};

/// How windows and step counts are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Pessimistic bounds: every phase lasts all of its steps and every
    /// window its worst-case length.
    Worst,
    /// Measured quantities stand in for the bounds.
    #[default]
    Scaled,
}

/// `ceil(log2 n)`, at least 1.
pub fn log_n(n: usize) -> u64 {
    (ceil_log2(n as u64) as u64).max(1)
}

/// Steps per phase in worst-case mode.
pub fn steps_per_phase(n: usize) -> u64 {
    10 * log_n(n) * log_n(n)
}

/// Weak-diameter bound of a `k`-separated decomposition.
pub fn diameter_bound(n: usize, k: u64) -> u64 {
    4 * k * log_n(n).pow(3)
}

/// Color bound of a decomposition.
pub fn color_bound(n: usize) -> usize {
    2 * log_n(n) as usize
}

/// Where a labelled wave reached a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reach {
    pub dist: u64,
    pub label: u64,
    pub parent: Option<NodeId>,
    pub hops: u32,
}

const T_WAVE: u8 = 20;

struct Wave {
    ctx: u64,
    radius: u64,
    nbrs: Vec<(NodeId, u64)>,
    reach: Option<Reach>,
    pending: BTreeMap<u64, Vec<NodeId>>,
}

impl Wave {
    fn schedule(&mut self) {
        let r = self.reach.expect("reached");
        for &(u, a) in &self.nbrs {
            if Some(u) != r.parent && r.dist + a <= self.radius {
                self.pending.entry(r.dist + a).or_default().push(u);
            }
        }
    }

    fn next(&self) -> Wake {
        match self.pending.keys().next() {
            Some(&r) => Wake::At(r),
            None => Wake::Idle,
        }
    }
}

impl Program for Wave {
    fn protocol(&self) -> &'static str {
        "labelled-wave"
    }
    fn start(&mut self) -> Wake {
        if self.reach.is_some() {
            self.schedule();
        }
        self.next()
    }
    fn send(&mut self, round: u64, out: &mut Outbox) {
        let r = self.reach.expect("only reached nodes send");
        for u in self.pending.remove(&round).unwrap_or_default() {
            out.send(u, Message::new(T_WAVE, vec![r.label, r.hops as u64 + 1]).with_ctx(self.ctx));
        }
    }
    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        if self.reach.is_none() {
            if let Some((from, m)) = inbox.iter().min_by_key(|(f, m)| (m.payload[0], *f)) {
                self.reach =
                    Some(Reach { dist: round, label: m.payload[0], parent: Some(*from), hops: m.payload[1] as u32 });
                self.schedule();
            }
        }
        self.next()
    }
}

/// Multi-source wave where an edge of length `a` takes `a` rounds. Each
/// node adopts the first label to arrive (smallest label, then smallest
/// sender, on ties) and records where it came from.
pub fn labelled_wave(s: &mut Session, sources: &[Option<u64>], radius: u64, window: Option<u64>, ctx: u64) -> Result<Vec<Option<Reach>>> {
    let g = s.graph;
    let factory = |v: NodeId| Wave {
        ctx,
        radius,
        nbrs: g.neighbors(v).iter().map(|a| (a.to, a.w)).collect(),
        reach: sources[v].map(|label| Reach { dist: 0, label, parent: None, hops: 0 }),
        pending: BTreeMap::new(),
    };
    let out = match window {
        Some(w) => s.run_window(w, 1, factory)?,
        None => s.run(1, factory)?,
    };
    Ok(out.programs.into_iter().map(|p| p.reach).collect())
}

/// How the construction runs its labelled waves.
pub trait Waves {
    fn wave(&mut self, s: &mut Session, sources: &[Option<u64>], radius: u64, ctx: u64) -> Result<Vec<Option<Reach>>>;
}

/// Waves with every node awake, [`labelled_wave`].
#[derive(Clone, Copy, Debug, Default)]
pub struct SyncWaves {
    pub mode: Mode,
}

impl Waves for SyncWaves {
    fn wave(&mut self, s: &mut Session, sources: &[Option<u64>], radius: u64, ctx: u64) -> Result<Vec<Option<Reach>>> {
        let window = (self.mode == Mode::Worst).then_some(radius + 1);
        labelled_wave(s, sources, radius, window, ctx)
    }
}

/// Per-phase accounting of one color.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub living_before: usize,
    pub living_after: usize,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorOutcome {
    pub clusters: Vec<Cluster>,
    /// Nodes of the input set left unclustered.
    pub dead: Vec<NodeId>,
    pub phases: Vec<PhaseStats>,
}

/// Trees under construction, keyed by label.
type Trees = BTreeMap<u64, BTreeMap<NodeId, TreeSlot>>;

fn slots_of(trees: &Trees, labels: &BTreeSet<u64>, n: usize) -> Vec<Vec<Slot>> {
    let mut slots: Vec<Vec<Slot>> = vec![Vec::new(); n];
    for &l in labels {
        let t = &trees[&l];
        let mut kids: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&v, s) in t {
            if let Some(p) = s.parent {
                kids.entry(p).or_default().push(v);
            }
        }
        for (&v, s) in t {
            slots[v].push(Slot { tree: l, parent: s.parent, depth: s.depth, kids: kids.remove(&v).unwrap_or_default() });
        }
    }
    slots
}

fn width_of(trees: &Trees, labels: &BTreeSet<u64>) -> u64 {
    let mut m: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
    for l in labels {
        for (&v, s) in &trees[l] {
            if let Some(p) = s.parent {
                *m.entry((v.min(p), v.max(p))).or_insert(0) += 1;
            }
        }
    }
    m.into_values().max().unwrap_or(1).max(1)
}

/// Grows one color over the nodes with `living[v]`, with clusters pairwise
/// more than `k` apart. Runs in the session's graph, whose weights are
/// lengths.
pub fn build_one_color(s: &mut Session, living: &[bool], k: u64, color: usize, level: u32, mode: Mode) -> Result<ColorOutcome> {
    build_one_color_with(s, &mut SyncWaves { mode }, living, k, color, level, mode)
}

/// [`build_one_color`] with the given wave implementation.
pub fn build_one_color_with(
    s: &mut Session,
    waves: &mut dyn Waves,
    living: &[bool],
    k: u64,
    color: usize,
    level: u32,
    mode: Mode,
) -> Result<ColorOutcome> {
    let g = s.graph;
    let n = g.n();
    let b = log_n(n);
    let r_steps = steps_per_phase(n);
    let ctx = color as u64;
    let mut alive = living.to_vec();
    let mut label: Vec<Option<u64>> = (0..n).map(|v| alive[v].then_some(v as u64)).collect();
    let mut trees: Trees = (0..n)
        .filter(|&v| alive[v])
        .map(|v| (v as u64, BTreeMap::from([(v, TreeSlot { parent: None, depth: 0, terminal: true })])))
        .collect();
    let depth_bound = diameter_bound(n, k);
    let mut phases = Vec::new();

    for i in 0..b as u32 {
        let before = alive.iter().filter(|x| **x).count();
        let mask = (1u64 << i) - 1;
        let blue = |l: u64| (l >> i) & 1 == 0;
        let mut stopped: BTreeSet<u64> = BTreeSet::new();
        let mut steps = 0;
        loop {
            let active: BTreeSet<u64> = (0..n)
                .filter(|&v| alive[v])
                .filter_map(|v| label[v])
                .filter(|&l| blue(l) && !stopped.contains(&l))
                .collect();
            if active.is_empty() {
                break;
            }
            if steps >= r_steps {
                return Err(Error::Construction(format!("phase {i} did not settle within {r_steps} steps")));
            }
            steps += 1;
            let tree_w = match mode {
                Mode::Worst => depth_bound + 1,
                Mode::Scaled => 1,
            };

            let sources: Vec<Option<u64>> =
                (0..n).map(|v| label[v].filter(|l| alive[v] && active.contains(l))).collect();
            let reach = waves.wave(s, &sources, k, ctx)?;
            let request: Vec<bool> = (0..n)
                .map(|x| match (alive[x], label[x], reach[x]) {
                    (true, Some(l), Some(r)) => !blue(l) && (l & mask) == (r.label & mask),
                    _ => false,
                })
                .collect();

            let mut wave_tree = Tree::singletons(&reach.iter().map(Option::is_some).collect::<Vec<_>>());
            for v in 0..n {
                if let Some(r) = reach[v] {
                    wave_tree.parent[v] = r.parent;
                }
            }
            wave_tree.rebuild()?;
            let wave_window = match mode {
                Mode::Worst => k + 1,
                Mode::Scaled => wave_tree.window(),
            };
            let own = (0..n).map(|v| if wave_tree.on[v] { vec![request[v] as u64] } else { vec![] }).collect();
            let up = pipeline::convergecast(s, &wave_tree, wave_window, own, &pipeline::sum_combine, ctx)?;
            let path = |v: NodeId| up.subtree[v].first().copied().unwrap_or(0) > 0;

            let slots = slots_of(&trees, &active, n);
            let width = width_of(&trees, &active);
            let own: Vec<_> = (0..n)
                .map(|v| {
                    slots[v]
                        .iter()
                        .map(|sl| {
                            let member = label[v] == Some(sl.tree) && alive[v];
                            let req = if member { up.subtree[v].first().copied().unwrap_or(0) } else { 0 };
                            vec![req, member as u64]
                        })
                        .collect()
                })
                .collect();
            let totals = pipeline::multi_convergecast(s, &slots, tree_w, width, own, &pipeline::sum_combine, ctx)?;
            let seeds: Vec<Vec<Option<Vec<u64>>>> = (0..n)
                .map(|v| {
                    slots[v]
                        .iter()
                        .zip(&totals[v])
                        .map(|(sl, t)| sl.parent.is_none().then(|| vec![(t[0] * 2 * b > t[1]) as u64]))
                        .collect()
                })
                .collect();
            let verdict = pipeline::multi_broadcast(s, &slots, tree_w, width, seeds, &|_, _, x| x.to_vec(), ctx)?;
            let mut accepted: BTreeMap<u64, bool> = BTreeMap::new();
            for v in 0..n {
                for (sl, val) in slots[v].iter().zip(&verdict[v]) {
                    if let Some(val) = val {
                        accepted.insert(sl.tree, val[0] == 1);
                    }
                }
            }

            let seeds = (0..n)
                .map(|v| match (reach[v], sources[v]) {
                    (Some(r), Some(_)) if r.dist == 0 => {
                        let acc = accepted.get(&r.label).copied().unwrap_or(false);
                        let d = trees[&r.label].get(&v).map_or(0, |s| s.depth);
                        Some(vec![acc as u64, d as u64])
                    }
                    _ => None,
                })
                .collect();
            let lbl = &reach;
            let tr = &trees;
            let down = pipeline::broadcast(
                s,
                &wave_tree,
                wave_window,
                seeds,
                &|v, x| {
                    if x.is_empty() || lbl[v].is_none_or(|r| r.dist == 0) {
                        return x.to_vec();
                    }
                    let own_depth = match tr[&lbl[v].unwrap().label].get(&v) {
                        Some(s) => s.depth as u64,
                        None => x[1] + 1,
                    };
                    vec![x[0], own_depth]
                },
                ctx,
            )?;

            for v in 0..n {
                let Some(r) = reach[v] else { continue };
                if r.dist == 0 || !path(v) {
                    continue;
                }
                let acc = down[v].first().copied() == Some(1);
                let old = label[v];
                if acc {
                    let t = trees.get_mut(&r.label).expect("active tree");
                    t.entry(v).or_insert(TreeSlot { parent: r.parent, depth: down[v][1] as u32, terminal: false });
                    if request[v] {
                        t.get_mut(&v).unwrap().terminal = true;
                        label[v] = Some(r.label);
                    }
                } else if request[v] {
                    alive[v] = false;
                    label[v] = None;
                }
                if request[v] {
                    if let Some(slot) = old.and_then(|o| trees.get_mut(&o)).and_then(|t| t.get_mut(&v)) {
                        slot.terminal = false;
                    }
                }
            }
            for l in &active {
                if !accepted.get(l).copied().unwrap_or(false) {
                    stopped.insert(*l);
                }
            }
        }
        if mode == Mode::Worst {
            let per_step = 2 * (k + 1) + 2 * (depth_bound + 1);
            s.elapse(per_step * (r_steps - steps));
        }
        let after = alive.iter().filter(|x| **x).count();
        if (after as u64) * 2 * b < (before as u64) * (2 * b - 1) {
            return Err(Error::Construction(format!(
                "phase {i} killed {} of {before} nodes, over the 1/2b budget",
                before - after
            )));
        }
        phases.push(PhaseStats { living_before: before, living_after: after, steps });
    }

    let start = living.iter().filter(|x| **x).count();
    let end = alive.iter().filter(|x| **x).count();
    if 2 * end < start {
        return Err(Error::Construction(format!("color kept {end} of {start} nodes, below half")));
    }
    let mut members: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
    for v in 0..n {
        if let (true, Some(l)) = (alive[v], label[v]) {
            members.entry(l).or_default().push(v);
        }
    }
    let clusters = members
        .into_iter()
        .map(|(l, m)| {
            let tree = prune(trees.remove(&l).expect("tree of a live label"));
            Cluster { id: ClusterId { level, root: l as NodeId }, color, members: m, tree }
        })
        .collect();
    let dead = (0..n).filter(|&v| living[v] && !alive[v]).collect();
    Ok(ColorOutcome { clusters, dead, phases })
}

/// Drops tree branches without terminals.
fn prune(mut tree: BTreeMap<NodeId, TreeSlot>) -> BTreeMap<NodeId, TreeSlot> {
    loop {
        let parents: BTreeSet<NodeId> = tree.values().filter_map(|s| s.parent).collect();
        let drop: Vec<NodeId> = tree
            .iter()
            .filter(|(v, s)| !s.terminal && s.parent.is_some() && !parents.contains(v))
            .map(|(&v, _)| v)
            .collect();
        if drop.is_empty() {
            return tree;
        }
        for v in drop {
            tree.remove(&v);
        }
    }
}

/// Colors everything: repeated [`build_one_color`] on what is left.
pub fn build_decomposition(s: &mut Session, k: u64, level: u32, mode: Mode) -> Result<(Decomposition, Vec<Vec<PhaseStats>>)> {
    build_decomposition_with(s, &mut SyncWaves { mode }, k, level, mode)
}

/// [`build_decomposition`] with the given wave implementation.
pub fn build_decomposition_with(
    s: &mut Session,
    waves: &mut dyn Waves,
    k: u64,
    level: u32,
    mode: Mode,
) -> Result<(Decomposition, Vec<Vec<PhaseStats>>)> {
    let n = s.graph.n();
    let mut left = vec![true; n];
    let mut colors = Vec::new();
    let mut stats = Vec::new();
    while left.iter().any(|x| *x) {
        if colors.len() > color_bound(n).max(1) {
            return Err(Error::Construction(format!("more than {} colors", color_bound(n))));
        }
        let out = build_one_color_with(s, waves, &left, k, colors.len(), level, mode)?;
        for c in &out.clusters {
            for &v in &c.members {
                left[v] = false;
            }
        }
        colors.push(out.clusters);
        stats.push(out.phases);
    }
    Ok((Decomposition { separation: k, colors }, stats))
}

/// A `d`-cover from a `(2d+1)`-separated decomposition: every cluster
/// grows by its `d`-neighbourhood along one wave per color.
pub fn expand(s: &mut Session, dec: &Decomposition, d: u64, level: u32, mode: Mode) -> Result<Cover> {
    expand_with(s, &mut SyncWaves { mode }, dec, d, level)
}

/// [`expand`] with the given wave implementation.
pub fn expand_with(s: &mut Session, waves: &mut dyn Waves, dec: &Decomposition, d: u64, level: u32) -> Result<Cover> {
    let n = s.graph.n();
    let mut clusters = Vec::new();
    for (col, cl) in dec.colors.iter().enumerate() {
        let mut sources = vec![None; n];
        for (i, c) in cl.iter().enumerate() {
            for &v in &c.members {
                sources[v] = Some(i as u64);
            }
        }
        let reach = waves.wave(s, &sources, d, col as u64)?;
        let mut grown: Vec<Cluster> = cl.to_vec();
        let mut order: Vec<NodeId> = (0..n).filter(|&v| reach[v].is_some_and(|r| r.dist > 0)).collect();
        order.sort_by_key(|&v| reach[v].unwrap().hops);
        for v in order {
            let r = reach[v].unwrap();
            let c = &mut grown[r.label as usize];
            let p = r.parent.expect("non-source has a parent");
            let depth = c.tree[&p].depth + 1;
            c.tree.entry(v).or_insert(TreeSlot { parent: Some(p), depth, terminal: true }).terminal = true;
            c.members.push(v);
        }
        for mut c in grown {
            c.members.sort_unstable();
            c.id.level = level;
            clusters.push(c);
        }
    }
    Ok(Cover { scale: d, clusters })
}

/// Everything about one synchronous cover construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverBuild {
    pub cover: Cover,
    pub decomposition: Decomposition,
    pub stats: Vec<Vec<PhaseStats>>,
}

/// `d`-cover of the session graph with every node awake.
pub fn build_cover_sync(s: &mut Session, d: u64, level: u32, mode: Mode) -> Result<CoverBuild> {
    let (decomposition, stats) = build_decomposition(s, 2 * d + 1, level, mode)?;
    let cover = expand(s, &decomposition, d, level, mode)?;
    Ok(CoverBuild { cover, decomposition, stats })
}

/// Largest number of trees of one cover sharing an edge.
pub fn tree_multiplicity(cover: &Cover) -> usize {
    edge_tree_multiplicity(&cover.clusters).into_values().max().unwrap_or(0)
}

/// Cluster (index) of each node's own color class in `cover`, i.e. the
/// expansion of the decomposition cluster it was colored in.
pub fn home_clusters(dec: &Decomposition, n: usize) -> Vec<usize> {
    let mut home = vec![usize::MAX; n];
    let mut i = 0;
    for cl in &dec.colors {
        for c in cl {
            for &v in &c.members {
                home[v] = i;
            }
            i += 1;
        }
    }
    home
}

/// Length view of `g` used by hop-metric algorithms.
pub fn hop_view(g: &Graph) -> Graph {
    g.unweighted()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_graph, shapes, Family, GraphSpec, WeightMode};
    use crate::oracle::{check_cover, check_decomposition, CoverBounds};
    use crate::sim::SimConfig;

    fn session(g: &Graph) -> Session<'_> {
        Session::new(g, SimConfig::congest(g))
    }

    fn graph(f: Family, n: usize) -> Graph {
        gen_graph(&GraphSpec::new(f, n, WeightMode::Unit, 3)).unwrap()
    }

    #[test]
    fn path_of_eight_keeps_half() {
        let g = graph(Family::Path, 8);
        let mut s = session(&g);
        let out = build_one_color(&mut s, &[true; 8], 2, 0, 0, Mode::Scaled).unwrap();
        let kept: usize = out.clusters.iter().map(|c| c.members.len()).sum();
        assert!(kept >= 4);
        let dec = Decomposition { separation: 2, colors: vec![out.clusters] };
        let v: Vec<_> = check_decomposition(&g, &dec, diameter_bound(8, 2), 1)
            .into_iter()
            .filter(|v| v.kind != "partition")
            .collect();
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn grid_decomposition_is_clean() {
        let g = graph(Family::Grid, 64);
        let mut s = session(&g);
        let (dec, stats) = build_decomposition(&mut s, 2, 0, Mode::Scaled).unwrap();
        let v = check_decomposition(&g, &dec, diameter_bound(64, 2), color_bound(64));
        assert!(v.is_empty(), "{v:?}");
        for phases in stats {
            for p in phases {
                assert!(p.living_after as u64 * 12 >= p.living_before as u64 * 11);
            }
        }
    }

    #[test]
    fn edgeless_is_one_color() {
        let g = shapes::edgeless(16);
        let mut s = session(&g);
        let (dec, _) = build_decomposition(&mut s, 3, 0, Mode::Scaled).unwrap();
        assert_eq!(dec.colors.len(), 1);
        assert_eq!(dec.colors[0].len(), 16);
    }

    #[test]
    fn star_and_cycle_covers() {
        for (g, d) in [(shapes::star(6), 1), (graph(Family::Cycle, 32), 4)] {
            let mut s = session(&g);
            let b = build_cover_sync(&mut s, d, 0, Mode::Scaled).unwrap();
            let colors = b.decomposition.colors.len();
            let bounds = CoverBounds {
                stretch: 2 * diameter_bound(g.n(), 2 * d + 1) / d + 1,
                node_multiplicity: colors,
                edge_multiplicity: usize::MAX,
            };
            let v = check_cover(&g, &b.cover, bounds);
            assert!(v.is_empty(), "{v:?}");
            assert!(colors <= color_bound(g.n()));
        }
    }

    #[test]
    fn weighted_lengths_are_respected() {
        let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: 60 }, 30, WeightMode::Uniform { max: 5 }, 1)).unwrap();
        let mut s = session(&g);
        let b = build_cover_sync(&mut s, 6, 0, Mode::Scaled).unwrap();
        let v = check_decomposition(&g, &b.decomposition, diameter_bound(30, 13), color_bound(30));
        assert!(v.is_empty(), "{v:?}");
        let bounds = CoverBounds { stretch: 1000, node_multiplicity: b.decomposition.colors.len(), edge_multiplicity: usize::MAX };
        let v = check_cover(&g, &b.cover, bounds);
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn worst_mode_is_slower_but_same_shape() {
        let g = graph(Family::Grid, 16);
        let mut a = session(&g);
        let mut w = session(&g);
        let sa = build_cover_sync(&mut a, 1, 0, Mode::Scaled).unwrap();
        let sw = build_cover_sync(&mut w, 1, 0, Mode::Worst).unwrap();
        assert_eq!(sa.decomposition, sw.decomposition);
        assert!(w.report.rounds > a.report.rounds);
    }
}
