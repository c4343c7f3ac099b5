//! Undirected weighted graphs: the data model every algorithm runs on.
//!
//! Node ids are dense integers `0..n` and double as the unique identifiers
//! the distributed algorithms use. Edges are kept in canonical order
//! (`u < v`, lexicographic) so that every run is reproducible.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type Weight = u64;

/// Default exponent `c` in the weight bound `maxW <= n^c`.
pub const DEFAULT_WEIGHT_EXPONENT: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: Weight,
}

impl Edge {
    pub fn other(&self, x: NodeId) -> NodeId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Adjacency entry: neighbour, weight, index into `Graph::edges`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Adj {
    pub to: NodeId,
    pub w: Weight,
    pub edge: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<Adj>>,
    weight_exponent: u32,
}

/// `n^c`, saturating.
pub fn weight_bound(n: usize, c: u32) -> Weight {
    (n as u64).max(1).saturating_pow(c)
}

impl Graph {
    /// Builds a graph, rejecting anything `validate` would flag.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        Self::with_exponent(n, edges, DEFAULT_WEIGHT_EXPONENT)
    }

    pub fn with_exponent(n: usize, edges: Vec<Edge>, weight_exponent: u32) -> Result<Self> {
        let g = Self::from_raw(n, edges, weight_exponent);
        match g.validate().into_iter().next() {
            None => Ok(g),
            Some(v) => Err(Error::InvalidGraph(v.to_string())),
        }
    }

    /// Builds without checking invariants. Endpoints are only normalised to
    /// `u <= v`; out-of-range endpoints are kept out of the adjacency lists.
    pub fn from_raw(n: usize, edges: Vec<Edge>, weight_exponent: u32) -> Self {
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| if e.u <= e.v { e } else { Edge { u: e.v, v: e.u, w: e.w } })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v, e.w));
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.u < n && e.v < n && e.u != e.v {
                adj[e.u].push(Adj { to: e.v, w: e.w, edge: i });
                adj[e.v].push(Adj { to: e.u, w: e.w, edge: i });
            }
        }
        for a in &mut adj {
            a.sort_by_key(|x| (x.to, x.edge));
        }
        Graph { n, edges, adj, weight_exponent }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: NodeId) -> &[Adj] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn max_weight(&self) -> Weight {
        self.edges.iter().map(|e| e.w).max().unwrap_or(0)
    }

    pub fn weight_exponent(&self) -> u32 {
        self.weight_exponent
    }

    pub fn has_zero_weight(&self) -> bool {
        self.edges.iter().any(|e| e.w == 0)
    }

    /// Edge index between two adjacent nodes.
    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.adj[u]
            .binary_search_by_key(&v, |a| a.to)
            .ok()
            .map(|i| self.adj[u][i].edge)
    }

    /// Same topology with every weight replaced.
    pub fn map_weights(&self, f: impl Fn(Weight) -> Weight, weight_exponent: u32) -> Graph {
        let edges = self.edges.iter().map(|e| Edge { w: f(e.w), ..*e }).collect();
        Graph::from_raw(self.n, edges, weight_exponent)
    }

    /// Unit-weight view of the same topology.
    pub fn unweighted(&self) -> Graph {
        self.map_weights(|_| 1, self.weight_exponent)
    }

    /// Connected component id (smallest member) of every node.
    pub fn components(&self) -> Vec<NodeId> {
        let mut comp = vec![usize::MAX; self.n];
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = s;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for a in &self.adj[x] {
                    if comp[a.to] == usize::MAX {
                        comp[a.to] = s;
                        stack.push(a.to);
                    }
                }
            }
        }
        comp
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let bound = weight_bound(self.n, self.weight_exponent);
        let mut seen = HashSet::new();
        for e in &self.edges {
            if e.u >= self.n || e.v >= self.n {
                out.push(Violation::NodeOutOfRange { u: e.u, v: e.v });
                continue;
            }
            if e.u == e.v {
                out.push(Violation::SelfLoop { node: e.u });
                continue;
            }
            if !seen.insert((e.u, e.v)) {
                out.push(Violation::DuplicateEdge { u: e.u, v: e.v });
            }
            if e.w > bound {
                out.push(Violation::WeightOutOfRange { u: e.u, v: e.v, w: e.w, bound });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    SelfLoop { node: NodeId },
    DuplicateEdge { u: NodeId, v: NodeId },
    NodeOutOfRange { u: NodeId, v: NodeId },
    WeightOutOfRange { u: NodeId, v: NodeId, w: Weight, bound: Weight },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { node } => write!(f, "self-loop at {node}"),
            Violation::DuplicateEdge { u, v } => write!(f, "duplicate edge ({u},{v})"),
            Violation::NodeOutOfRange { u, v } => write!(f, "edge ({u},{v}) references a missing node"),
            Violation::WeightOutOfRange { u, v, w, bound } => {
                write!(f, "edge ({u},{v}) weight {w} exceeds bound {bound}")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Generators

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Path,
    Cycle,
    Grid,
    /// `m` edges drawn uniformly without replacement.
    RandomGnm { m: usize },
    RandomTree,
    /// Two cliques of `n/2` nodes joined by a single bridge edge.
    Barbell,
}

impl Family {
    pub fn parse(name: &str, m: Option<usize>) -> Result<Self> {
        Ok(match name {
            "path" => Family::Path,
            "cycle" => Family::Cycle,
            "grid" => Family::Grid,
            "random-gnm" | "gnm" => Family::RandomGnm {
                m: m.ok_or_else(|| Error::Spec("random-gnm needs an edge count".into()))?,
            },
            "random-tree" | "tree" => Family::RandomTree,
            "barbell" => Family::Barbell,
            other => return Err(Error::Spec(format!("unknown graph family `{other}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum WeightMode {
    Unit,
    Uniform { max: Weight },
    /// A `zero_fraction` share of edges get weight 0, the rest uniform in `1..=max`.
    ZeroHeavy { zero_fraction: f64, max: Weight },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub family: Family,
    pub n: usize,
    pub weights: WeightMode,
    pub seed: u64,
}

impl GraphSpec {
    pub fn new(family: Family, n: usize, weights: WeightMode, seed: u64) -> Self {
        GraphSpec { family, n, weights, seed }
    }
}

pub fn gen_graph(spec: &GraphSpec) -> Result<Graph> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::Spec("graph needs at least one node".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
    match spec.family {
        Family::Path => pairs.extend((1..n).map(|i| (i - 1, i))),
        Family::Cycle => {
            pairs.extend((1..n).map(|i| (i - 1, i)));
            if n >= 3 {
                pairs.push((0, n - 1));
            }
        }
        Family::Grid => {
            let cols = ((n as f64).sqrt().ceil() as usize).max(1);
            for i in 0..n {
                if i % cols + 1 < cols && i + 1 < n {
                    pairs.push((i, i + 1));
                }
                if i + cols < n {
                    pairs.push((i, i + cols));
                }
            }
        }
        Family::RandomGnm { m } => {
            let max_m = n * (n - 1) / 2;
            if m > max_m {
                return Err(Error::Spec(format!("random-gnm: m={m} exceeds {max_m}")));
            }
            let mut seen = HashSet::new();
            while pairs.len() < m {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a == b {
                    continue;
                }
                let key = (a.min(b), a.max(b));
                if seen.insert(key) {
                    pairs.push(key);
                }
            }
        }
        Family::RandomTree => {
            let mut order: Vec<NodeId> = (0..n).collect();
            order.shuffle(&mut rng);
            for i in 1..n {
                let p = order[rng.gen_range(0..i)];
                pairs.push((p.min(order[i]), p.max(order[i])));
            }
        }
        Family::Barbell => {
            let half = n / 2;
            for (lo, hi) in [(0, half), (half, n)] {
                for a in lo..hi {
                    for b in a + 1..hi {
                        pairs.push((a, b));
                    }
                }
            }
            if half > 0 && half < n {
                pairs.push((half - 1, half));
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(u, v)| Edge { u, v, w: draw_weight(&spec.weights, &mut rng) })
        .collect();
    Graph::new(n, edges)
}

fn draw_weight(mode: &WeightMode, rng: &mut ChaCha8Rng) -> Weight {
    match *mode {
        WeightMode::Unit => 1,
        WeightMode::Uniform { max } => rng.gen_range(1..=max.max(1)),
        WeightMode::ZeroHeavy { zero_fraction, max } => {
            if rng.gen_bool(zero_fraction.clamp(0.0, 1.0)) {
                0
            } else {
                rng.gen_range(1..=max.max(1))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Edge-list text format

/// Fixed shapes used by examples, tests and sweeps beyond the generator
/// families.
pub mod shapes {
    use super::{Edge, Graph, Weight};

    /// `n` nodes, no edges.
    pub fn edgeless(n: usize) -> Graph {
        Graph::new(n, vec![]).expect("edgeless graph")
    }

    /// Node 0 joined to every other node.
    pub fn star(n: usize) -> Graph {
        Graph::new(n, (1..n).map(|v| Edge { u: 0, v, w: 1 }).collect()).expect("star")
    }

    /// Cliques of `k` nodes (the last may be smaller) chained by single
    /// edges between consecutive cliques.
    pub fn path_of_cliques(n: usize, k: usize, w: Weight) -> Graph {
        let k = k.max(1);
        let mut edges = Vec::new();
        let mut start = 0;
        while start < n {
            let end = (start + k).min(n);
            for a in start..end {
                for b in a + 1..end {
                    edges.push(Edge { u: a, v: b, w });
                }
            }
            if end < n {
                edges.push(Edge { u: end - 1, v: end, w });
            }
            start = end;
        }
        Graph::new(n, edges).expect("path of cliques")
    }

    /// A hub (node 0) with `arms` unit paths of `len` nodes each.
    pub fn star_of_paths(arms: usize, len: usize) -> Graph {
        let mut edges = Vec::new();
        for a in 0..arms {
            let first = 1 + a * len;
            edges.push(Edge { u: 0, v: first, w: 1 });
            for i in 1..len {
                edges.push(Edge { u: first + i - 1, v: first + i, w: 1 });
            }
        }
        Graph::new(1 + arms * len, edges).expect("star of paths")
    }
}

pub fn save_graph(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.m());
    for e in g.edges() {
        s.push_str(&format!("{} {} {}\n", e.u, e.v, e.w));
    }
    s
}

pub fn load_graph(text: &str) -> Result<Graph> {
    load_graph_with_exponent(text, DEFAULT_WEIGHT_EXPONENT)
}

pub fn load_graph_with_exponent(text: &str, weight_exponent: u32) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let nums = parse_fields(hline, header, 2)?;
    let (n, m) = (nums[0] as usize, nums[1] as usize);
    let bound = weight_bound(n, weight_exponent);
    let mut edges = Vec::with_capacity(m);
    let mut seen = HashSet::new();
    for (line, l) in lines {
        let f = parse_fields(line, l, 3)?;
        let (u, v, w) = (f[0] as usize, f[1] as usize, f[2]);
        let err = |msg: String| Error::Parse { line, msg };
        if u >= n || v >= n {
            return Err(err(format!("node out of range (n={n})")));
        }
        if u == v {
            return Err(err(format!("self-loop at {u}")));
        }
        if w > bound {
            return Err(err(format!("weight {w} exceeds bound {bound}")));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(err(format!("duplicate edge ({u},{v})")));
        }
        edges.push(Edge { u, v, w });
    }
    if edges.len() != m {
        return Err(Error::Parse { line: 1, msg: format!("header declares {m} edges, found {}", edges.len()) });
    }
    Graph::with_exponent(n, edges, weight_exponent)
}

fn parse_fields(line: usize, l: &str, want: usize) -> Result<Vec<u64>> {
    let f: Vec<&str> = l.split_whitespace().collect();
    if f.len() != want {
        return Err(Error::Parse { line, msg: format!("expected {want} fields, found {}", f.len()) });
    }
    f.iter()
        .map(|s| s.parse::<u64>().map_err(|e| Error::Parse { line, msg: format!("`{s}`: {e}") }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_three_unit() {
        let g = gen_graph(&GraphSpec::new(Family::Path, 3, WeightMode::Unit, 7)).unwrap();
        assert_eq!(g.edges(), &[Edge { u: 0, v: 1, w: 1 }, Edge { u: 1, v: 2, w: 1 }]);
    }

    #[test]
    fn cycle_four_is_two_regular() {
        let g = gen_graph(&GraphSpec::new(Family::Cycle, 4, WeightMode::Unit, 0)).unwrap();
        assert_eq!(g.m(), 4);
        assert!((0..4).all(|v| g.degree(v) == 2));
    }

    #[test]
    fn connected_families_are_connected() {
        for fam in [Family::Path, Family::Cycle, Family::Grid, Family::RandomTree, Family::Barbell] {
            for n in [1, 2, 5, 17, 64] {
                let g = gen_graph(&GraphSpec::new(fam, n, WeightMode::Uniform { max: 9 }, 3)).unwrap();
                assert!(g.components().iter().all(|&c| c == 0), "{fam:?} n={n}");
            }
        }
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(gen_graph(&GraphSpec::new(Family::Path, 0, WeightMode::Unit, 0)).is_err());
        assert!(Family::parse("hypercube", None).is_err());
    }

    #[test]
    fn loads_p3() {
        let g = load_graph("3 2\n0 1 5\n1 2 3\n").unwrap();
        assert_eq!(g.edges(), &[Edge { u: 0, v: 1, w: 5 }, Edge { u: 1, v: 2, w: 3 }]);
        assert_eq!(save_graph(&g), "3 2\n0 1 5\n1 2 3\n");
    }

    #[test]
    fn comments_are_skipped() {
        let g = load_graph("# header\n2 1\n# edge\n1 0 4\n").unwrap();
        assert_eq!(g.edges(), &[Edge { u: 0, v: 1, w: 4 }]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        // n=3, c=3: bound 27
        match load_graph("3 1\n0 1 28\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_graph("3 2\n0 1 1\n1 0 2\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(load_graph("3 1\n0 x 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(load_graph("3 2\n0 1 1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn validate_reports_violations() {
        let tri = Graph::from_raw(3, vec![Edge { u: 0, v: 1, w: 1 }, Edge { u: 1, v: 2, w: 1 }, Edge { u: 0, v: 2, w: 1 }], 3);
        assert!(tri.validate().is_empty());
        let looped = Graph::from_raw(3, vec![Edge { u: 2, v: 2, w: 1 }], 3);
        assert_eq!(looped.validate(), vec![Violation::SelfLoop { node: 2 }]);
        let dup = Graph::from_raw(3, vec![Edge { u: 0, v: 1, w: 1 }, Edge { u: 1, v: 0, w: 2 }], 3);
        assert_eq!(dup.validate(), vec![Violation::DuplicateEdge { u: 0, v: 1 }]);
    }
}
