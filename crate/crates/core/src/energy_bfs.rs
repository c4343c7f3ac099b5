//! Low-energy BFS: layered covers built level by level, then one
//! cover-driven thresholded wave.
//!
//! The two lowest covers are built with every node awake. Every further
//! level runs the same decomposition, but each of its waves is a chain of
//! cover-driven waves over the levels built so far, so nodes sleep through
//! most of it. Construction stops once some cluster holds a whole component
//! or the top scale reaches twice the threshold.

use std::collections::BTreeSet;

use crate::cover::{Cluster, Cover, Decomposition, LayeredCover};
use crate::cover_bfs::{cover_bfs, lowest_level, BfsPlan, Seed};
use crate::decomp::{self, build_cover_sync, color_bound, diameter_bound, home_clusters, log_n, Mode, PhaseStats, Reach, Waves};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::oracle::{check_cover, check_decomposition, check_layered, check_phases, CheckViolation, CoverBounds, DistanceMap};
use crate::pipeline::{self, Slot};
use crate::sim::{Model, RunReport, Session, SimConfig};

#[derive(Clone, Debug, Default)]
pub struct BfsOptions {
    /// Cover base `B`; chosen from the measured stretch when absent.
    pub base: Option<u64>,
    pub mode: Mode,
    /// A previously built layered cover; skips construction.
    pub cover: Option<LayeredCover>,
    pub round_limit: Option<u64>,
    /// Check every cover and decomposition built with [`audit_layers`];
    /// a violation fails the run.
    pub audit: bool,
}

/// What a BFS run produced besides distances.
#[derive(Clone, Debug)]
pub struct BfsRun {
    pub dist: DistanceMap,
    pub layered: LayeredCover,
    pub decompositions: Vec<Decomposition>,
    /// Per decomposition, per color, per phase.
    pub stats: Vec<Vec<Vec<PhaseStats>>>,
    pub plan: BfsPlan,
    pub report: RunReport,
    /// Rounds spent with every node awake.
    pub bootstrap_rounds: u64,
}

impl BfsRun {
    /// The cover and decompositions behind the run, for auditing.
    pub fn layers(&self) -> Layers {
        Layers { layered: self.layered.clone(), decompositions: self.decompositions.clone(), stats: self.stats.clone() }
    }
}

/// Layered cover under construction with the decompositions behind it.
#[derive(Clone, Debug)]
pub struct Layers {
    pub layered: LayeredCover,
    pub decompositions: Vec<Decomposition>,
    pub stats: Vec<Vec<Vec<PhaseStats>>>,
}

fn assemble_parents(child: &Cover, dec: &Decomposition, n: usize) -> Vec<Option<usize>> {
    let home = home_clusters(dec, n);
    child.clusters.iter().map(|c| Some(home[c.id.root])).collect()
}

/// Covers at scales 1 and `B` with every node awake, charged to `s` as
/// all-awake rounds. Without a given base, `B` is the smallest power of two
/// (at least `floor` and 4) covering twice the measured stretch, doubled until the
/// `B`-cover's stretch is at most `B/2` and containment holds.
pub fn bootstrap_base_covers(s: &mut Session, base: Option<u64>, floor: u64, mode: Mode) -> Result<Layers> {
    let g = s.graph;
    let n = g.n();
    let mut cfg = SimConfig { model: Model::Congest, ..s.config.clone() };
    cfg.round_limit = s.config.round_limit.saturating_sub(s.report.rounds);
    let mut sub = Session::new(g, cfg);
    let one = build_cover_sync(&mut sub, 1, 0, mode)?;
    let mut b = match base {
        Some(b) if b >= 2 => b,
        Some(b) => return Err(Error::Spec(format!("cover base {b} is below 2"))),
        None => ((2.0 * one.cover.stretch(g).max(1.0)).ceil() as u64).next_power_of_two().max(floor.max(4)),
    };
    let out = loop {
        let next = build_cover_sync(&mut sub, b, 1, mode)?;
        let layered = LayeredCover {
            base: b,
            levels: vec![one.cover.clone(), next.cover.clone()],
            parents: vec![assemble_parents(&one.cover, &next.decomposition, n)],
        };
        let fits = next.cover.stretch(g) <= (b / 2) as f64 && check_layered(g, &layered).is_empty();
        if fits || base.is_some() {
            if !check_layered(g, &layered).is_empty() {
                return Err(Error::Construction(format!("base {b} violates cover containment")));
            }
            break Layers {
                layered,
                decompositions: vec![one.decomposition, next.decomposition],
                stats: vec![one.stats, next.stats],
            };
        }
        if b > 4 * n as u64 {
            return Err(Error::Construction("no base up to 4n satisfies the stretch condition".into()));
        }
        b *= 2;
    };
    s.absorb_awake(&sub.finish());
    Ok(out)
}

/// Labelled waves realized as chains of cover-driven waves.
pub struct CoverWaves<'a> {
    pub layered: &'a LayeredCover,
    pub mode: Mode,
    /// Number of cover-driven runs so far.
    pub runs: u64,
}

impl Waves for CoverWaves<'_> {
    fn wave(&mut self, s: &mut Session, sources: &[Option<u64>], radius: u64, ctx: u64) -> Result<Vec<Option<Reach>>> {
        let g = s.graph;
        let lc = self.layered;
        let a_max = g.edges().iter().map(|e| e.w).filter(|&w| w <= radius).max().unwrap_or(1).max(1);
        let top = lc.top();
        let step = if lowest_level(lc.base, top, a_max) < top {
            (lc.scale(top) / 2 + 1).saturating_sub(a_max).max(1)
        } else {
            radius.max(1)
        };
        let mut reach: Vec<Option<Reach>> =
            sources.iter().map(|x| x.map(|label| Reach { dist: 0, label, parent: None, hops: 0 })).collect();
        let mut base = 0;
        while base < radius {
            let lo = (base + 1).saturating_sub(a_max);
            let seeds: Vec<Option<Seed>> = reach
                .iter()
                .map(|r| {
                    r.filter(|r| r.dist >= lo && r.dist <= base)
                        .map(|r| Seed { label: r.label, offset: r.dist - lo, hops: r.hops })
                })
                .collect();
            if seeds.iter().all(Option::is_none) {
                break;
            }
            let next = (base + step).min(radius);
            let out = cover_bfs(s, lc, &seeds, next - lo, self.mode, ctx)?;
            self.runs += 1;
            for (v, r) in out.reach.into_iter().enumerate() {
                if let (Some(r), None) = (r, reach[v]) {
                    if lo + r.dist > base {
                        reach[v] = Some(Reach { dist: lo + r.dist, ..r });
                    }
                }
            }
            base = next;
        }
        Ok(reach)
    }
}

/// One slot per cluster-tree node; the tree id is the cluster index.
pub fn cluster_slots(clusters: &[Cluster], n: usize) -> Vec<Vec<Slot>> {
    let mut slots = vec![Vec::new(); n];
    for (i, c) in clusters.iter().enumerate() {
        let kids = c.children();
        for (&v, t) in &c.tree {
            slots[v].push(Slot {
                tree: i as u64,
                parent: t.parent,
                depth: t.depth,
                kids: kids.get(&v).cloned().unwrap_or_default(),
            });
        }
    }
    slots
}

fn width(clusters: &[Cluster]) -> u64 {
    crate::cover::edge_tree_multiplicity(clusters).into_values().max().unwrap_or(1).max(1) as u64
}

/// Builds level `j = top + 1` of `layers` with cover-driven waves and links
/// the current top level to it. The new parent ids reach the child
/// clusters' members with one broadcast per child tree.
pub fn build_cover_next(s: &mut Session, layers: &mut Layers, mode: Mode) -> Result<()> {
    let g = s.graph;
    let n = g.n();
    let j = layers.layered.levels.len();
    let d = layers.layered.scale(j);
    let snapshot = layers.layered.clone();
    let mut waves = CoverWaves { layered: &snapshot, mode, runs: 0 };
    let (dec, stats) = decomp::build_decomposition_with(s, &mut waves, 2 * d + 1, j as u32, mode)?;
    let cover = decomp::expand_with(s, &mut waves, &dec, d, j as u32)?;
    let parents = assemble_parents(&layers.layered.levels[j - 1], &dec, n);

    let children = &layers.layered.levels[j - 1].clusters;
    let slots = cluster_slots(children, n);
    let seeds = (0..n)
        .map(|v| {
            slots[v]
                .iter()
                .map(|sl| sl.parent.is_none().then(|| vec![parents[sl.tree as usize].unwrap_or(0) as u64]))
                .collect()
        })
        .collect();
    pipeline::multi_broadcast(s, &slots, 1, width(children), seeds, &|_, _, x| x.to_vec(), j as u64)?;

    layers.layered.levels.push(cover);
    layers.layered.parents.push(parents);
    layers.decompositions.push(dec);
    layers.stats.push(stats);
    let bad = check_layered(g, &layers.layered);
    if let Some(v) = bad.first() {
        return Err(Error::Construction(format!("level {j} containment: {} ({} violations)", v.detail, bad.len())));
    }
    Ok(())
}

/// For each node, the first cluster of `cover` that holds its whole
/// component, if any.
///
/// Nodes swap membership lists for `max(⌈log n⌉, memberships)` all-awake
/// rounds, then every cluster aggregates whether all neighbours of its
/// members are members and broadcasts the verdict.
pub fn detect_global_cluster(s: &mut Session, cover: &Cover) -> Result<Vec<Option<usize>>> {
    let g = s.graph;
    let n = g.n();
    let memberships = cover.memberships(n);
    let rounds = memberships.iter().map(Vec::len).max().unwrap_or(0).max(log_n(n) as usize);
    let mut heard: Vec<BTreeSet<(NodeId, u64)>> = vec![BTreeSet::new(); n];
    let awake = vec![true; n];
    for i in 0..rounds {
        let msgs = (0..n)
            .map(|v| match memberships[v].get(i) {
                Some(&c) => g.neighbors(v).iter().map(|a| (a.to, vec![c as u64])).collect(),
                None => Vec::new(),
            })
            .collect();
        for (v, got) in pipeline::exchange(s, &awake, msgs, 0)?.into_iter().enumerate() {
            heard[v].extend(got.into_iter().map(|(f, x)| (f, x[0])));
        }
    }
    let slots = cluster_slots(&cover.clusters, n);
    let own = (0..n)
        .map(|v| {
            slots[v]
                .iter()
                .map(|sl| {
                    let c = &cover.clusters[sl.tree as usize];
                    let closed = !c.contains(v) || g.neighbors(v).iter().all(|a| heard[v].contains(&(a.to, sl.tree)));
                    vec![closed as u64]
                })
                .collect()
        })
        .collect();
    let w = width(&cover.clusters);
    let up = pipeline::multi_convergecast(s, &slots, 1, w, own, &pipeline::min_combine, 0)?;
    let seeds = (0..n)
        .map(|v| slots[v].iter().zip(&up[v]).map(|(sl, x)| sl.parent.is_none().then(|| x.clone())).collect())
        .collect();
    let down = pipeline::multi_broadcast(s, &slots, 1, w, seeds, &|_, _, x| x.to_vec(), 0)?;
    Ok((0..n)
        .map(|v| {
            slots[v]
                .iter()
                .zip(&down[v])
                .filter(|(sl, x)| cover.clusters[sl.tree as usize].contains(v) && x.as_ref().is_some_and(|x| x[0] == 1))
                .map(|(sl, _)| sl.tree as usize)
                .min()
        })
        .collect())
}

/// Keeps only the whole-component clusters on the top level and makes each
/// the parent of every cluster below it in its component; the roots below
/// pass the new parent id down their trees.
pub fn collapse_top(s: &mut Session, layers: &mut Layers, global: &[Option<usize>]) -> Result<()> {
    let n = s.graph.n();
    let lc = &mut layers.layered;
    let top = lc.top();
    let keep: BTreeSet<usize> = global.iter().flatten().copied().collect();
    let renumber: std::collections::BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let clusters = std::mem::take(&mut lc.levels[top].clusters);
    lc.levels[top].clusters = clusters.into_iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, c)| c).collect();
    if top == 0 {
        return Ok(());
    }
    let below = &lc.levels[top - 1].clusters;
    let parents: Vec<Option<usize>> = below.iter().map(|c| global[c.id.root].map(|g| renumber[&g])).collect();
    let slots = cluster_slots(below, n);
    let seeds = (0..n)
        .map(|v| {
            slots[v]
                .iter()
                .map(|sl| sl.parent.is_none().then(|| vec![parents[sl.tree as usize].unwrap_or(0) as u64]))
                .collect()
        })
        .collect();
    pipeline::multi_broadcast(s, &slots, 1, width(below), seeds, &|_, _, x| x.to_vec(), top as u64)?;
    lc.parents[top - 1] = parents;
    Ok(())
}

fn session_config(g: &Graph, opts: &BfsOptions) -> SimConfig {
    let mut cfg = SimConfig::sleeping(g);
    if let Some(l) = opts.round_limit {
        cfg.round_limit = l;
    }
    cfg
}

/// Adds levels until one holds every component whole or, with a
/// threshold, the top scale reaches twice it.
fn grow_layers(s: &mut Session, layers: &mut Layers, threshold: Option<u64>, mode: Mode) -> Result<()> {
    loop {
        let top = layers.layered.top();
        if threshold.is_some_and(|t| layers.layered.scale(top) >= 2 * t) {
            return Ok(());
        }
        let global = detect_global_cluster(s, &layers.layered.levels[top])?;
        if global.iter().all(Option::is_some) {
            return collapse_top(s, layers, &global);
        }
        build_cover_next(s, layers, mode)?;
    }
}

/// A layered cover fit for threshold `limit` (`None`: any distance),
/// taken from the options or built. Returns it with the all-awake rounds.
pub fn prepare_layers(s: &mut Session, limit: Option<u64>, opts: &BfsOptions) -> Result<(Layers, u64)> {
    let g = s.graph;
    let n = g.n();
    let threshold = limit.unwrap_or(default_threshold(g));
    let mut boot = 0;
    let layers = match &opts.cover {
        Some(lc) => {
            if lc.levels.iter().any(|l| l.clusters.iter().any(|c| c.tree.keys().any(|&v| v >= n))) {
                return Err(Error::Spec("cached cover does not fit the graph".into()));
            }
            let bad = check_layered(g, lc);
            if let Some(v) = bad.first() {
                return Err(Error::Spec(format!("cached cover fails the containment check: {}", v.detail)));
            }
            Layers { layered: lc.clone(), decompositions: Vec::new(), stats: Vec::new() }
        }
        None => {
            // a level whose clusters outgrow B/2 times its scale breaks
            // containment; start over with a larger base
            let mut floor = 4;
            loop {
                let before = s.report.rounds;
                let mut layers = bootstrap_base_covers(s, opts.base, floor, opts.mode)?;
                boot += s.report.rounds - before;
                match grow_layers(s, &mut layers, limit.map(|_| threshold), opts.mode) {
                    Ok(()) => break layers,
                    Err(Error::Construction(m)) if opts.base.is_none() && m.contains("containment") => {
                        floor = 2 * layers.layered.base;
                        if floor > 4 * n as u64 {
                            return Err(Error::Construction(m));
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    };
    if opts.audit {
        if let Some(v) = audit_layers(g, &layers).first() {
            return Err(Error::Construction(format!("audit: {} {}", v.kind, v.detail)));
        }
    }
    Ok((layers, boot))
}

/// Containment, every cover level and every decomposition of `layers`
/// against the construction bounds.
pub fn audit_layers(g: &Graph, layers: &Layers) -> Vec<CheckViolation> {
    let n = g.n();
    let mut out = check_layered(g, &layers.layered);
    for stats in &layers.stats {
        out.extend(check_phases(n, stats));
    }
    for (j, dec) in layers.decompositions.iter().enumerate() {
        out.extend(check_decomposition(g, dec, diameter_bound(n, dec.separation), color_bound(n)));
        if let Some(cover) = layers.layered.levels.get(j) {
            let d = cover.scale.max(1);
            let bounds = CoverBounds {
                stretch: 2 * diameter_bound(n, dec.separation) / d + 1,
                node_multiplicity: dec.colors.len(),
                edge_multiplicity: usize::MAX,
            };
            out.extend(check_cover(g, cover, bounds));
        }
    }
    out
}

fn default_threshold(g: &Graph) -> u64 {
    g.n() as u64 * g.max_weight().max(1)
}

fn seeds_of(n: usize, sources: &[NodeId]) -> Result<Vec<Option<Seed>>> {
    if sources.is_empty() {
        return Err(Error::Spec("source set is empty".into()));
    }
    if let Some(&v) = sources.iter().find(|&&v| v >= n) {
        return Err(Error::Spec(format!("source {v} out of range")));
    }
    let set: BTreeSet<NodeId> = sources.iter().copied().collect();
    Ok((0..n).map(|v| set.contains(&v).then(|| Seed::new(0))).collect())
}

fn finish(g: &Graph, sources: &[NodeId], limit: Option<u64>, opts: &BfsOptions) -> Result<BfsRun> {
    let seeds = seeds_of(g.n(), sources)?;
    let mut s = Session::new(g, session_config(g, opts));
    let (layers, bootstrap_rounds) = prepare_layers(&mut s, limit, opts)?;
    let threshold = limit.unwrap_or(default_threshold(g));
    let out = cover_bfs(&mut s, &layers.layered, &seeds, threshold, opts.mode, 0)?;
    let dist = out.reach.iter().map(|r| r.map(|r| r.dist)).collect();
    Ok(BfsRun {
        dist,
        layered: layers.layered,
        decompositions: layers.decompositions,
        stats: layers.stats,
        plan: out.plan,
        report: s.finish(),
        bootstrap_rounds,
    })
}

/// Exact BFS from `sources` over the lengths of `g` (use
/// [`Graph::unweighted`] for hop distances).
pub fn full_bfs(g: &Graph, sources: &[NodeId], opts: &BfsOptions) -> Result<BfsRun> {
    finish(g, sources, None, opts)
}

/// BFS distances up to `threshold`; farther nodes get `None`.
pub fn thresholded_bfs(g: &Graph, sources: &[NodeId], threshold: u64, opts: &BfsOptions) -> Result<BfsRun> {
    finish(g, sources, Some(threshold), opts)
}

/// Thresholded wave from offset sources inside an existing session:
/// builds the covers, then runs the wave.
pub fn thresholded_bfs_in(s: &mut Session, seeds: &[Option<Seed>], threshold: u64, opts: &BfsOptions) -> Result<Vec<Option<Reach>>> {
    let (layers, _) = prepare_layers(s, Some(threshold), opts)?;
    Ok(cover_bfs(s, &layers.layered, seeds, threshold, opts.mode, 0)?.reach)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_graph, Edge, Family, GraphSpec, WeightMode};
    use crate::oracle::bfs;

    fn gnm(n: usize, m: usize, seed: u64) -> Graph {
        gen_graph(&GraphSpec::new(Family::RandomGnm { m }, n, WeightMode::Unit, seed)).unwrap()
    }

    #[test]
    fn layers_pass_the_audit() {
        let g = gnm(60, 90, 2);
        let run = full_bfs(&g, &[0, 30], &BfsOptions { audit: true, ..Default::default() }).unwrap();
        assert_eq!(run.dist, bfs(&g, &[0, 30]));
        assert!(audit_layers(&g, &run.layers()).is_empty());
        assert!(run.layered.base.is_power_of_two() && run.layered.base >= 4);
    }

    #[test]
    fn cached_cover_is_reused() {
        let g = gnm(40, 60, 5);
        let first = full_bfs(&g, &[0], &BfsOptions::default()).unwrap();
        let text = first.layered.to_cache().unwrap();
        let cover = LayeredCover::from_cache(&text).unwrap();
        let again = full_bfs(&g, &[7], &BfsOptions { cover: Some(cover), ..Default::default() }).unwrap();
        assert_eq!(again.dist, bfs(&g, &[7]));
        assert_eq!(again.bootstrap_rounds, 0);
        assert!(again.report.rounds < first.report.rounds);
    }

    #[test]
    fn cover_of_another_graph_is_rejected() {
        let big = gnm(40, 60, 5);
        let cover = full_bfs(&big, &[0], &BfsOptions::default()).unwrap().layered;
        let small = gnm(10, 12, 1);
        let err = full_bfs(&small, &[0], &BfsOptions { cover: Some(cover), ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::Spec(_)));
    }

    #[test]
    fn disconnected_nodes_stay_unreached() {
        let g = Graph::new(5, vec![Edge { u: 0, v: 1, w: 1 }, Edge { u: 3, v: 4, w: 1 }]).unwrap();
        let run = full_bfs(&g, &[0], &BfsOptions::default()).unwrap();
        assert_eq!(run.dist, vec![Some(0), Some(1), None, None, None]);
    }

    #[test]
    fn bad_sources_are_rejected() {
        let g = gnm(8, 10, 0);
        assert!(full_bfs(&g, &[], &BfsOptions::default()).is_err());
        assert!(full_bfs(&g, &[8], &BfsOptions::default()).is_err());
    }

    #[test]
    fn base_below_two_is_rejected() {
        let g = gnm(8, 10, 0);
        assert!(full_bfs(&g, &[0], &BfsOptions { base: Some(1), ..Default::default() }).is_err());
    }
}
