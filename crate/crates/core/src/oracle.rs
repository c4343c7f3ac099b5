//! Sequential reference computations and structural checkers.
//!
//! Everything here is deliberately simple and independent of the
//! distributed code paths it is used to validate.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cover::{Cluster, Cover, Decomposition, LayeredCover};
use crate::cssp::{CutterRecord, FrameRecord};
use crate::forest::Forest;
use crate::graph::{Graph, NodeId};

/// Closest-source distance per node; `None` is infinity.
pub type DistanceMap = Vec<Option<u64>>;

pub fn dijkstra(g: &Graph, sources: &[NodeId]) -> DistanceMap {
    let mut offsets = vec![None; g.n()];
    for &s in sources {
        offsets[s] = Some(0);
    }
    dijkstra_offsets(g, &vec![true; g.n()], &offsets)
}

/// Dijkstra on the subgraph induced by `active`, where node `v` starts at
/// `offsets[v]` (a virtual source attached with that weight).
pub fn dijkstra_offsets(g: &Graph, active: &[bool], offsets: &[Option<u64>]) -> DistanceMap {
    let mut dist: DistanceMap = vec![None; g.n()];
    let mut heap = BinaryHeap::new();
    for v in 0..g.n() {
        if let (true, Some(o)) = (active[v], offsets[v]) {
            heap.push(Reverse((o, v)));
        }
    }
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist[v].is_some() {
            continue;
        }
        dist[v] = Some(d);
        for a in g.neighbors(v) {
            if active[a.to] && dist[a.to].is_none() {
                heap.push(Reverse((d + a.w, a.to)));
            }
        }
    }
    dist
}

/// `n - 1` relaxation sweeps over the edge list.
pub fn bellman_ford(g: &Graph, sources: &[NodeId]) -> DistanceMap {
    let mut dist: DistanceMap = vec![None; g.n()];
    for &s in sources {
        dist[s] = Some(0);
    }
    for _ in 1..g.n().max(1) {
        let mut changed = false;
        for e in g.edges() {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                if let Some(da) = dist[a] {
                    if dist[b].is_none_or(|db| da + e.w < db) {
                        dist[b] = Some(da + e.w);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Hop distances from `sources`, at most `radius` hops.
pub fn bfs_limited(g: &Graph, sources: &[NodeId], radius: u64) -> DistanceMap {
    let mut dist: DistanceMap = vec![None; g.n()];
    let mut q = VecDeque::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            q.push_back(s);
        }
    }
    while let Some(v) = q.pop_front() {
        let d = dist[v].unwrap();
        if d == radius {
            continue;
        }
        for a in g.neighbors(v) {
            if dist[a.to].is_none() {
                dist[a.to] = Some(d + 1);
                q.push_back(a.to);
            }
        }
    }
    dist
}

/// Weighted distances from `sources`, kept only up to `radius`. On a unit
/// graph this is `bfs_limited`.
pub fn dijkstra_limited(g: &Graph, sources: &[NodeId], radius: u64) -> DistanceMap {
    threshold(&dijkstra(g, sources), radius)
}

pub fn bfs(g: &Graph, sources: &[NodeId]) -> DistanceMap {
    bfs_limited(g, sources, u64::MAX)
}

/// Exact distance if at most `tau`, else infinity.
pub fn reference_thresholded(g: &Graph, sources: &[NodeId], tau: u64) -> DistanceMap {
    threshold(&dijkstra(g, sources), tau)
}

pub fn threshold(d: &DistanceMap, tau: u64) -> DistanceMap {
    d.iter().map(|x| x.filter(|&v| v <= tau)).collect()
}

/// One structural violation found by a checker.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckViolation {
    pub kind: String,
    pub subjects: Vec<u64>,
    pub detail: String,
}

impl CheckViolation {
    fn new(kind: &str, subjects: Vec<u64>, detail: impl Into<String>) -> Self {
        CheckViolation { kind: kind.into(), subjects, detail: detail.into() }
    }
}

pub fn violations_json(v: &[CheckViolation]) -> String {
    serde_json::to_string(v).expect("violations serialise")
}

/// Bounds a cover is checked against.
#[derive(Clone, Copy, Debug)]
pub struct CoverBounds {
    /// Cluster trees may be at most `scale * stretch` deep (weighted).
    pub stretch: u64,
    pub node_multiplicity: usize,
    pub edge_multiplicity: usize,
}

fn check_tree(g: &Graph, c: &Cluster, out: &mut Vec<CheckViolation>) {
    let cid = vec![c.id.level as u64, c.id.root as u64];
    let roots: Vec<_> = c.tree.iter().filter(|(_, s)| s.parent.is_none()).map(|(&v, _)| v).collect();
    if roots != vec![c.id.root] {
        out.push(CheckViolation::new("tree", cid.clone(), format!("roots {roots:?}, expected [{}]", c.id.root)));
    }
    for (&v, s) in &c.tree {
        match s.parent {
            None if s.depth != 0 => out.push(CheckViolation::new("tree", vec![v as u64], "root depth is not 0")),
            None => {}
            Some(p) => match c.tree.get(&p) {
                None => out.push(CheckViolation::new("tree", vec![v as u64, p as u64], "parent outside tree")),
                Some(ps) => {
                    if ps.depth + 1 != s.depth {
                        out.push(CheckViolation::new(
                            "tree",
                            vec![v as u64, p as u64],
                            format!("depth {} under parent depth {}", s.depth, ps.depth),
                        ));
                    }
                    if g.edge_between(v, p).is_none() {
                        out.push(CheckViolation::new("tree", vec![v as u64, p as u64], "tree edge not in graph"));
                    }
                }
            },
        }
        if s.terminal != c.contains(v) {
            out.push(CheckViolation::new("terminals", vec![v as u64], "terminal flag disagrees with membership"));
        }
    }
    for &v in &c.members {
        if !c.tree.contains_key(&v) {
            out.push(CheckViolation::new("terminals", vec![v as u64], "member missing from tree"));
        }
    }
}

pub fn check_cover(g: &Graph, cover: &Cover, bounds: CoverBounds) -> Vec<CheckViolation> {
    let mut out = Vec::new();
    let d = cover.scale;
    for c in &cover.clusters {
        check_tree(g, c, &mut out);
        let r = c.radius(g);
        if r > d.saturating_mul(bounds.stretch) {
            out.push(CheckViolation::new(
                "depth",
                vec![c.id.root as u64],
                format!("tree radius {r} exceeds {}", d.saturating_mul(bounds.stretch)),
            ));
        }
    }
    let member = cover.memberships(g.n());
    for (v, m) in member.iter().enumerate() {
        if m.len() > bounds.node_multiplicity {
            out.push(CheckViolation::new("multiplicity", vec![v as u64], format!("in {} clusters", m.len())));
        }
        let ball: Vec<NodeId> =
            dijkstra_limited(g, &[v], d).iter().enumerate().filter(|(_, x)| x.is_some()).map(|(u, _)| u).collect();
        if !m.iter().any(|&ci| ball.iter().all(|&u| cover.clusters[ci].contains(u))) {
            out.push(CheckViolation::new("ball", vec![v as u64], format!("no cluster holds the {d}-ball")));
        }
    }
    for ((a, b), k) in crate::cover::edge_tree_multiplicity(&cover.clusters) {
        if k > bounds.edge_multiplicity {
            out.push(CheckViolation::new("edge-multiplicity", vec![a as u64, b as u64], format!("in {k} trees")));
        }
    }
    out
}

pub fn check_decomposition(
    g: &Graph,
    dec: &Decomposition,
    diameter_bound: u64,
    color_bound: usize,
) -> Vec<CheckViolation> {
    let mut out = Vec::new();
    let k = dec.separation;
    if dec.colors.len() > color_bound {
        out.push(CheckViolation::new("colors", vec![dec.colors.len() as u64], format!("bound {color_bound}")));
    }
    for (v, cs) in dec.color_of(g.n()).iter().enumerate() {
        if cs.len() != 1 {
            out.push(CheckViolation::new("partition", vec![v as u64], format!("colored {} times", cs.len())));
        }
    }
    for (col, clusters) in dec.colors.iter().enumerate() {
        let mut owner = vec![usize::MAX; g.n()];
        for (i, c) in clusters.iter().enumerate() {
            check_tree(g, c, &mut out);
            for &v in &c.members {
                owner[v] = i;
            }
        }
        for (i, c) in clusters.iter().enumerate() {
            let near = dijkstra_limited(g, &c.members, k);
            for (u, du) in near.iter().enumerate() {
                if du.is_some() && owner[u] != usize::MAX && owner[u] != i {
                    out.push(CheckViolation::new(
                        "separation",
                        vec![col as u64, c.id.root as u64, clusters[owner[u]].id.root as u64],
                        format!("clusters within distance {k}"),
                    ));
                    break;
                }
            }
            for &v in &c.members {
                let dv = dijkstra(g, &[v]);
                if c.members.iter().any(|&u| dv[u].is_none_or(|x| x > diameter_bound)) {
                    out.push(CheckViolation::new(
                        "diameter",
                        vec![col as u64, c.id.root as u64],
                        format!("weak diameter exceeds {diameter_bound}"),
                    ));
                    break;
                }
            }
        }
    }
    out
}

/// Halving per color (at least half of the color's input survives) and
/// the per-phase kill budget (`after * 2b >= before * (2b - 1)`, `b =
/// ceil(log2 n)`).
pub fn check_phases(n: usize, colors: &[Vec<crate::decomp::PhaseStats>]) -> Vec<CheckViolation> {
    let b = crate::decomp::log_n(n) as usize;
    let mut out = Vec::new();
    for (c, phases) in colors.iter().enumerate() {
        for (i, p) in phases.iter().enumerate() {
            if p.living_after * 2 * b < p.living_before * (2 * b - 1) {
                out.push(CheckViolation::new(
                    "kill-budget",
                    vec![c as u64, i as u64],
                    format!("{} of {} survived", p.living_after, p.living_before),
                ));
            }
        }
        if let (Some(first), Some(last)) = (phases.first(), phases.last()) {
            if 2 * last.living_after < first.living_before {
                out.push(CheckViolation::new(
                    "halving",
                    vec![c as u64],
                    format!("{} of {} kept", last.living_after, first.living_before),
                ));
            }
        }
    }
    out
}

pub fn check_layered(g: &Graph, lc: &LayeredCover) -> Vec<CheckViolation> {
    let mut out = Vec::new();
    if lc.parents.len() + 1 < lc.levels.len() {
        out.push(CheckViolation::new("reference", vec![], "missing parent table"));
        return out;
    }
    for j in 0..lc.top() {
        let radius = lc.scale(j + 1) / 2;
        let next = &lc.levels[j + 1];
        for (i, c) in lc.levels[j].clusters.iter().enumerate() {
            let subj = vec![j as u64, c.id.root as u64];
            let Some(p) = lc.parents[j].get(i).copied().flatten().and_then(|p| next.clusters.get(p)) else {
                out.push(CheckViolation::new("reference", subj, "dangling parent id"));
                continue;
            };
            let hood = dijkstra_limited(g, &c.members, radius);
            let missing: BTreeSet<NodeId> =
                hood.iter().enumerate().filter(|(u, d)| d.is_some() && !p.contains(*u)).map(|(u, _)| u).collect();
            if !missing.is_empty() {
                out.push(CheckViolation::new(
                    "containment",
                    subj.clone(),
                    format!("parent misses {} nodes of the {radius}-neighbourhood", missing.len()),
                ));
            }
            if let Some(&x) = c.tree.keys().find(|x| !p.contains(**x)) {
                out.push(CheckViolation::new("relay", subj, format!("tree node {x} outside parent")));
            }
        }
    }
    out
}

/// Smallest-id component label of every active node in the induced subgraph.
pub fn induced_components(g: &Graph, active: &[bool]) -> Vec<Option<NodeId>> {
    let mut comp = vec![None; g.n()];
    for s in 0..g.n() {
        if !active[s] || comp[s].is_some() {
            continue;
        }
        comp[s] = Some(s);
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for a in g.neighbors(x) {
                if active[a.to] && comp[a.to].is_none() {
                    comp[a.to] = Some(s);
                    stack.push(a.to);
                }
            }
        }
    }
    comp
}

/// Checks that `f` is a maximal spanning forest of the active subgraph,
/// rooted at the smallest id of each component, with correct sizes.
pub fn check_forest(g: &Graph, active: &[bool], f: &Forest) -> Vec<CheckViolation> {
    let mut out = Vec::new();
    let comp = induced_components(g, active);
    let mut sizes = std::collections::BTreeMap::new();
    for c in comp.iter().flatten() {
        *sizes.entry(*c).or_insert(0u64) += 1;
    }
    for v in 0..g.n() {
        let sv = vec![v as u64];
        if !active[v] {
            if f.root[v].is_some() {
                out.push(CheckViolation::new("forest", sv, "inactive node in forest"));
            }
            continue;
        }
        if f.root[v] != comp[v] {
            out.push(CheckViolation::new("forest", sv.clone(), format!("root {:?}, expected {:?}", f.root[v], comp[v])));
        }
        if Some(f.size[v]) != comp[v].map(|c| sizes[&c]) {
            out.push(CheckViolation::new("forest", sv.clone(), format!("size {}", f.size[v])));
        }
        match f.parent[v] {
            None => {
                if f.root[v] != Some(v) || f.depth[v] != 0 {
                    out.push(CheckViolation::new("tree", sv.clone(), "parentless non-root"));
                }
            }
            Some(p) => {
                if !active[p] || g.edge_between(v, p).is_none() {
                    out.push(CheckViolation::new("tree", vec![v as u64, p as u64], "parent edge not in active subgraph"));
                } else if f.depth[p] + 1 != f.depth[v] {
                    out.push(CheckViolation::new("tree", vec![v as u64, p as u64], "depth mismatch"));
                }
                if !f.children[p].contains(&v) {
                    out.push(CheckViolation::new("tree", vec![v as u64, p as u64], "missing from parent's children"));
                }
            }
        }
        for &c in &f.children[v] {
            if f.parent[c] != Some(v) {
                out.push(CheckViolation::new("tree", vec![v as u64, c as u64], "child does not point back"));
            }
        }
    }
    out
}

fn frame_distances(g: &Graph, nodes: impl Iterator<Item = (NodeId, Option<u64>)>) -> DistanceMap {
    let mut active = vec![false; g.n()];
    let mut offsets = vec![None; g.n()];
    for (v, o) in nodes {
        active[v] = true;
        offsets[v] = o;
    }
    dijkstra_offsets(g, &active, &offsets)
}

/// Checks a cutter invocation: finite `dist'` within `[dist, dist + d/2)`,
/// infinite only when `dist > 2d`.
pub fn check_cutter(g: &Graph, rec: &CutterRecord) -> Vec<CheckViolation> {
    let dist = frame_distances(g, rec.nodes.iter().map(|e| (e.v, e.offset)));
    let d = rec.d as u128;
    let mut out = Vec::new();
    for e in &rec.nodes {
        let subj = vec![rec.frame, e.v as u64];
        let c = e.comp_size as u128;
        match (e.ticks, dist[e.v]) {
            (Some(t), Some(x)) => {
                let (t, x) = (t as u128, x as u128);
                if !(2 * c * x <= t * d && t * d < 2 * c * x + c * d) {
                    out.push(CheckViolation::new("cutter", subj, format!("dist {x}, dist' = {t}*{d}/{}", 2 * c)));
                }
            }
            (Some(t), None) => out.push(CheckViolation::new("cutter", subj, format!("finite dist' ({t} ticks) but unreachable"))),
            (None, Some(x)) if x as u128 <= 2 * d => {
                out.push(CheckViolation::new("cutter", subj, format!("infinite dist' but dist {x} <= 2W")))
            }
            (None, _) => {}
        }
    }
    out
}

/// Checks a frame's outputs against the thresholded oracle on its active set.
pub fn check_frame(g: &Graph, rec: &FrameRecord) -> Vec<CheckViolation> {
    let dist = threshold(&frame_distances(g, rec.nodes.iter().map(|&(v, o, _)| (v, o))), rec.d);
    rec.nodes
        .iter()
        .filter(|&&(v, _, out)| dist[v] != out)
        .map(|&(v, _, out)| {
            CheckViolation::new("frame", vec![rec.id, v as u64], format!("output {out:?}, expected {:?}", dist[v]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{ClusterId, TreeSlot};
    use crate::graph::{gen_graph, Edge, Family, GraphSpec, WeightMode};

    fn p3() -> Graph {
        Graph::new(3, vec![Edge { u: 0, v: 1, w: 2 }, Edge { u: 1, v: 2, w: 3 }]).unwrap()
    }

    #[test]
    fn dijkstra_p3() {
        assert_eq!(dijkstra(&p3(), &[0]), vec![Some(0), Some(2), Some(5)]);
        assert_eq!(reference_thresholded(&p3(), &[0], 4), vec![Some(0), Some(2), None]);
        assert_eq!(reference_thresholded(&p3(), &[0], 0), vec![Some(0), None, None]);
    }

    #[test]
    fn disconnected_is_infinite() {
        let g = Graph::new(3, vec![Edge { u: 0, v: 1, w: 1 }]).unwrap();
        assert_eq!(dijkstra(&g, &[0])[2], None);
    }

    #[test]
    fn dijkstra_matches_bellman_ford() {
        for seed in 0..30 {
            let g = gen_graph(&GraphSpec::new(
                Family::RandomGnm { m: 60 },
                30,
                WeightMode::ZeroHeavy { zero_fraction: 0.2, max: 50 },
                seed,
            ))
            .unwrap();
            let s = [seed as usize % 30, 7];
            assert_eq!(dijkstra(&g, &s), bellman_ford(&g, &s));
        }
    }

    fn path_cluster(level: u32, nodes: &[NodeId]) -> Cluster {
        let mut tree = std::collections::BTreeMap::new();
        for (i, &v) in nodes.iter().enumerate() {
            tree.insert(v, TreeSlot { parent: i.checked_sub(1).map(|j| nodes[j]), depth: i as u32, terminal: true });
        }
        let mut members = nodes.to_vec();
        members.sort();
        Cluster { id: ClusterId { level, root: nodes[0] }, color: 0, members, tree }
    }

    const LOOSE: CoverBounds = CoverBounds { stretch: 100, node_multiplicity: 100, edge_multiplicity: 100 };

    #[test]
    fn cover_single_node() {
        let g = Graph::new(1, vec![]).unwrap();
        let cover = Cover { scale: 1, clusters: vec![Cluster::singleton(0, 0, 0)] };
        assert!(check_cover(&g, &cover, LOOSE).is_empty());
    }

    #[test]
    fn cover_missing_ball() {
        let g = p3();
        let cover = Cover { scale: 3, clusters: vec![path_cluster(0, &[0, 1])] };
        let v = check_cover(&g, &cover, LOOSE);
        assert!(v.iter().any(|x| x.kind == "ball" && x.subjects == vec![1]));
        assert!(v.iter().any(|x| x.kind == "ball" && x.subjects == vec![2]));
    }

    #[test]
    fn cover_bad_depth() {
        let g = p3();
        let mut c = path_cluster(0, &[0, 1, 2]);
        c.tree.get_mut(&2).unwrap().depth = 5;
        let v = check_cover(&g, &Cover { scale: 2, clusters: vec![c] }, LOOSE);
        assert!(v.iter().any(|x| x.kind == "tree"));
    }

    #[test]
    fn decomposition_cases() {
        let g = Graph::new(3, vec![]).unwrap();
        let dec = Decomposition {
            separation: 1,
            colors: vec![(0..3).map(|v| Cluster::singleton(0, 0, v)).collect()],
        };
        assert!(check_decomposition(&g, &dec, 0, 1).is_empty());

        let g2 = Graph::new(2, vec![Edge { u: 0, v: 1, w: 1 }]).unwrap();
        let dec2 = Decomposition { separation: 1, colors: vec![vec![Cluster::singleton(0, 0, 0), Cluster::singleton(0, 0, 1)]] };
        assert!(check_decomposition(&g2, &dec2, 0, 1).iter().any(|x| x.kind == "separation"));

        let dec3 = Decomposition {
            separation: 1,
            colors: vec![vec![Cluster::singleton(0, 0, 0)], vec![Cluster::singleton(0, 1, 0), Cluster::singleton(0, 1, 1)]],
        };
        assert!(check_decomposition(&g2, &dec3, 0, 2).iter().any(|x| x.kind == "partition"));
    }

    #[test]
    fn layered_cases() {
        let g = Graph::new(1, vec![]).unwrap();
        let lvl = |j| Cover { scale: 1, clusters: vec![Cluster::singleton(j, 0, 0)] };
        let lc = LayeredCover { base: 2, levels: vec![lvl(0), lvl(1)], parents: vec![vec![Some(0)]] };
        assert!(check_layered(&g, &lc).is_empty());
        let dangling = LayeredCover { parents: vec![vec![Some(3)]], ..lc.clone() };
        assert!(check_layered(&g, &dangling).iter().any(|x| x.kind == "reference"));

        let p = gen_graph(&GraphSpec::new(Family::Path, 3, WeightMode::Unit, 0)).unwrap();
        let lc2 = LayeredCover {
            base: 2,
            levels: vec![
                Cover { scale: 1, clusters: vec![path_cluster(0, &[0])] },
                Cover { scale: 2, clusters: vec![path_cluster(1, &[0])] },
            ],
            parents: vec![vec![Some(0)]],
        };
        assert!(check_layered(&p, &lc2).iter().any(|x| x.kind == "containment"));
    }
}
