//! Rooted spanning forests of an active subgraph and the CONGEST Boruvka
//! construction.
//!
//! Every phase runs on fixed windows derived from a size bound `p` known to
//! all nodes of a component: fragment-id exchange, minimum-outgoing-edge
//! convergecast and broadcast, a connect round across the chosen edges, and
//! a depth flood from the new root. A fragment with no outgoing edge is a
//! whole component and skips to the final sequence, which re-roots every
//! tree at its smallest id and tells all nodes the component size.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::graph::{Graph, NodeId, Weight};
use crate::sim::{Message, Outbox, Program, Session, Wake};

/// Per-node view of a rooted spanning forest. Entries of inactive nodes
/// are `None` / empty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Forest {
    pub root: Vec<Option<NodeId>>,
    pub parent: Vec<Option<NodeId>>,
    pub children: Vec<Vec<NodeId>>,
    pub depth: Vec<u32>,
    /// Component size as known by each node.
    pub size: Vec<u64>,
}

impl Forest {
    pub fn empty(n: usize) -> Self {
        Forest {
            root: vec![None; n],
            parent: vec![None; n],
            children: vec![Vec::new(); n],
            depth: vec![0; n],
            size: vec![0; n],
        }
    }

    /// Forest where every active node is its own component.
    pub fn singletons(active: &[bool]) -> Self {
        let mut f = Forest::empty(active.len());
        for (v, _) in active.iter().enumerate().filter(|(_, a)| **a) {
            f.root[v] = Some(v);
            f.size[v] = 1;
        }
        f
    }

    pub fn max_depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Members of every component, keyed by root.
    pub fn components(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut m: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (v, r) in self.root.iter().enumerate() {
            if let Some(r) = r {
                m.entry(*r).or_default().push(v);
            }
        }
        m
    }

    pub(crate) fn set(&mut self, v: NodeId, root: NodeId, parent: Option<NodeId>, children: Vec<NodeId>, depth: u32, size: u64) {
        self.root[v] = Some(root);
        self.parent[v] = parent;
        self.children[v] = children;
        self.depth[v] = depth;
        self.size[v] = size;
    }
}

pub(crate) fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// Active neighbours of `v` with edge weights.
pub(crate) fn active_nbrs(g: &Graph, active: &[bool], v: NodeId) -> Vec<(NodeId, Weight)> {
    g.neighbors(v).iter().filter(|a| active[a.to]).map(|a| (a.to, a.w)).collect()
}

const T_FRAG: u8 = 1;
const T_UP: u8 = 2;
const T_DOWN: u8 = 3;
const T_CONNECT: u8 = 4;
const T_FLOOD: u8 = 5;
const T_MIN_UP: u8 = 6;
const T_MIN_DOWN: u8 = 7;
const T_REROOT: u8 = 8;
const T_SIZE_UP: u8 = 9;
const T_SIZE_DOWN: u8 = 10;

/// Outgoing-edge order: weight, then smaller endpoint, then larger.
type Key = (Weight, NodeId, NodeId);

fn key_msg(tag: u8, k: Option<Key>) -> Message {
    match k {
        Some((w, a, b)) => Message::new(tag, vec![w, a as u64, b as u64]),
        None => Message::new(tag, vec![]),
    }
}

fn msg_key(m: &Message) -> Option<Key> {
    match m.payload[..] {
        [w, a, b] => Some((w, a as NodeId, b as NodeId)),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Phase { index: u32, base: u64 },
    End { base: u64 },
    Finished,
}

/// One node of the CONGEST Boruvka protocol.
pub struct BoruvkaNode {
    id: NodeId,
    ctx: u64,
    nbrs: Vec<(NodeId, Weight)>,
    p: u64,
    phases: u32,
    mode: Mode,
    frag: NodeId,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    depth: u32,
    best: Option<Key>,
    waiting: usize,
    moe: Option<Key>,
    connect_from: Vec<NodeId>,
    tree_nbrs: Vec<NodeId>,
    new_root: bool,
    leader: NodeId,
    count: u64,
    size: u64,
    pending: BTreeMap<u64, Vec<(NodeId, Message)>>,
}

impl BoruvkaNode {
    /// `p` bounds the size of the node's component; `ctx` tags messages.
    pub fn new(g: &Graph, active: &[bool], v: NodeId, p: u64, ctx: u64) -> Self {
        let nbrs = if active[v] { active_nbrs(g, active, v) } else { Vec::new() };
        let p = p.max(1);
        let trivial = !active[v] || nbrs.is_empty() || p == 1;
        BoruvkaNode {
            id: v,
            ctx,
            nbrs,
            p,
            phases: ceil_log2(p),
            mode: if trivial { Mode::Finished } else { Mode::Phase { index: 0, base: 1 } },
            frag: v,
            parent: None,
            children: Vec::new(),
            depth: 0,
            best: None,
            waiting: 0,
            moe: None,
            connect_from: Vec::new(),
            tree_nbrs: Vec::new(),
            new_root: false,
            leader: v,
            count: 1,
            size: 1,
            pending: BTreeMap::new(),
        }
    }

    fn queue(&mut self, round: u64, to: NodeId, msg: Message) {
        self.pending.entry(round).or_default().push((to, msg.with_ctx(self.ctx)));
    }

    fn queue_children(&mut self, round: u64, msg: Message) {
        for c in self.children.clone() {
            self.queue(round, c, msg.clone());
        }
    }

    fn phase_len(&self) -> u64 {
        3 * self.p + 2
    }

    fn events(&self) -> Vec<u64> {
        let p = self.p;
        match self.mode {
            Mode::Phase { base, .. } => vec![base, base + p + 1, base + 2 * p + 1, base + 2 * p + 2, base + self.phase_len()],
            Mode::End { base } => (0..6).map(|i| base + i * p).collect(),
            Mode::Finished => vec![],
        }
    }

    fn enter_end(&mut self, round: u64) {
        self.mode = Mode::End { base: round };
        self.tick(round);
    }

    /// Window-start actions for `round`.
    fn tick(&mut self, round: u64) {
        let p = self.p;
        match self.mode {
            Mode::Phase { index, base } => {
                let off = round - base;
                if off == 0 {
                    for (u, _) in self.nbrs.clone() {
                        self.queue(round, u, Message::new(T_FRAG, vec![self.frag as u64]));
                    }
                } else if off == p + 1 {
                    if self.parent.is_none() {
                        let m = key_msg(T_DOWN, self.moe);
                        self.queue_children(round, m);
                    }
                } else if off == 2 * p + 1 {
                    match self.moe {
                        None => self.enter_end(round),
                        Some((_, a, b)) => {
                            if self.id == a || self.id == b {
                                let other = a + b - self.id;
                                self.queue(round, other, Message::new(T_CONNECT, vec![]));
                            }
                        }
                    }
                } else if off == 2 * p + 2 {
                    if self.new_root {
                        self.frag = self.id;
                        self.parent = None;
                        self.depth = 0;
                        self.children = self.tree_nbrs.clone();
                        self.queue_children(round, Message::new(T_FLOOD, vec![self.id as u64, 0]));
                    }
                } else if off == self.phase_len() {
                    let next = index + 1;
                    if next >= self.phases {
                        self.enter_end(round);
                    } else {
                        self.mode = Mode::Phase { index: next, base: round };
                        self.best = None;
                        self.moe = None;
                        self.connect_from.clear();
                        self.new_root = false;
                        self.tick(round);
                    }
                }
            }
            Mode::End { base } => {
                let off = round - base;
                if off == 0 {
                    self.leader = self.id;
                    self.start_up(round, T_MIN_UP);
                } else if off == p {
                    if self.parent.is_none() {
                        let m = Message::new(T_MIN_DOWN, vec![self.leader as u64]);
                        self.queue_children(round, m);
                    }
                } else if off == 2 * p {
                    if self.leader == self.id {
                        let mut nbrs = self.children.clone();
                        nbrs.extend(self.parent);
                        nbrs.sort_unstable();
                        self.parent = None;
                        self.depth = 0;
                        self.children = nbrs;
                        self.queue_children(round, Message::new(T_REROOT, vec![0]));
                    }
                } else if off == 3 * p {
                    self.count = 1;
                    self.start_up(round, T_SIZE_UP);
                } else if off == 4 * p && self.parent.is_none() {
                    self.size = self.count;
                    let m = Message::new(T_SIZE_DOWN, vec![self.size]);
                    self.queue_children(round, m);
                    self.mode = Mode::Finished;
                }
            }
            Mode::Finished => {}
        }
    }

    /// Starts a convergecast: leaves report right away.
    fn start_up(&mut self, round: u64, tag: u8) {
        self.waiting = self.children.len();
        if self.waiting == 0 {
            self.report_up(round, tag);
        }
    }

    fn report_up(&mut self, round: u64, tag: u8) {
        let Some(p) = self.parent else { return };
        let m = match tag {
            T_UP => key_msg(T_UP, self.best),
            T_MIN_UP => Message::new(T_MIN_UP, vec![self.leader as u64]),
            _ => Message::new(T_SIZE_UP, vec![self.count]),
        };
        self.queue(round, p, m);
    }

    fn local_best(&self, nbr_frag: &[(NodeId, NodeId)]) -> Option<Key> {
        nbr_frag
            .iter()
            .filter(|(_, f)| *f != self.frag)
            .map(|&(u, _)| {
                let w = self.nbrs.iter().find(|(x, _)| *x == u).map(|(_, w)| *w).unwrap_or(0);
                (w, u.min(self.id), u.max(self.id))
            })
            .min()
    }

    pub fn into_parts(self) -> (NodeId, Option<NodeId>, Vec<NodeId>, u32, u64) {
        (self.leader, self.parent, self.children, self.depth, self.size)
    }
}

impl Program for BoruvkaNode {
    fn protocol(&self) -> &'static str {
        "boruvka-forest"
    }

    fn start(&mut self) -> Wake {
        match self.mode {
            Mode::Finished => Wake::Done,
            _ => Wake::At(1),
        }
    }

    fn send(&mut self, round: u64, out: &mut Outbox) {
        if self.events().contains(&round) {
            self.tick(round);
        }
        if let Some(msgs) = self.pending.remove(&round) {
            for (to, m) in msgs {
                out.send(to, m);
            }
        }
    }

    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        let mut frags = Vec::new();
        for (from, m) in inbox {
            let from = *from;
            match m.tag {
                T_FRAG => frags.push((from, m.payload[0] as NodeId)),
                T_UP => {
                    self.best = self.best.into_iter().chain(msg_key(m)).min();
                    self.waiting -= 1;
                    if self.waiting == 0 {
                        if self.parent.is_some() {
                            self.report_up(round + 1, T_UP);
                        } else {
                            self.moe = self.best;
                        }
                    }
                }
                T_DOWN => {
                    self.moe = msg_key(m);
                    let fwd = key_msg(T_DOWN, self.moe);
                    self.queue_children(round + 1, fwd);
                }
                T_CONNECT => self.connect_from.push(from),
                T_FLOOD => {
                    self.frag = m.payload[0] as NodeId;
                    self.depth = m.payload[1] as u32 + 1;
                    self.parent = Some(from);
                    self.children = self.tree_nbrs.iter().copied().filter(|&x| x != from).collect();
                    let fwd = Message::new(T_FLOOD, vec![self.frag as u64, self.depth as u64]);
                    self.queue_children(round + 1, fwd);
                }
                T_MIN_UP | T_SIZE_UP => {
                    if m.tag == T_MIN_UP {
                        self.leader = self.leader.min(m.payload[0] as NodeId);
                    } else {
                        self.count += m.payload[0];
                    }
                    self.waiting -= 1;
                    if self.waiting == 0 {
                        self.report_up(round + 1, m.tag);
                    }
                }
                T_MIN_DOWN => {
                    self.leader = m.payload[0] as NodeId;
                    let fwd = m.clone();
                    self.queue_children(round + 1, Message::new(fwd.tag, fwd.payload));
                }
                T_REROOT => {
                    let mut nbrs = self.children.clone();
                    nbrs.extend(self.parent);
                    self.parent = Some(from);
                    self.depth = m.payload[0] as u32 + 1;
                    self.children = nbrs.into_iter().filter(|&x| x != from).collect();
                    self.children.sort_unstable();
                    self.queue_children(round + 1, Message::new(T_REROOT, vec![self.depth as u64]));
                }
                T_SIZE_DOWN => {
                    self.size = m.payload[0];
                    self.queue_children(round + 1, Message::new(T_SIZE_DOWN, vec![self.size]));
                    self.mode = Mode::Finished;
                }
                _ => {}
            }
        }
        if let Mode::Phase { base, .. } = self.mode {
            let off = round - base;
            if off == 0 {
                self.best = self.local_best(&frags);
                self.waiting = self.children.len();
                if self.waiting == 0 {
                    if self.parent.is_some() {
                        self.report_up(round + 1, T_UP);
                    } else {
                        self.moe = self.best;
                    }
                }
            } else if off == 2 * self.p + 1 {
                let mut nbrs = self.children.clone();
                nbrs.extend(self.parent);
                nbrs.extend(self.connect_from.iter().copied());
                self.new_root = false;
                if let Some((_, a, b)) = self.moe {
                    if self.id == a || self.id == b {
                        let other = a + b - self.id;
                        nbrs.push(other);
                        self.new_root = self.connect_from.contains(&other) && self.id < other;
                    }
                }
                nbrs.sort_unstable();
                nbrs.dedup();
                self.tree_nbrs = nbrs;
            }
        }
        if self.mode == Mode::Finished && self.pending.is_empty() {
            if self.parent.is_none() {
                self.size = self.count;
            }
            return Wake::Done;
        }
        let next_event = self.events().into_iter().filter(|&r| r > round).min();
        let next_send = self.pending.keys().next().copied();
        match next_event.into_iter().chain(next_send).min() {
            Some(r) => Wake::At(r),
            None => Wake::Done,
        }
    }
}

/// Maximal spanning forest of the subgraph induced by `active`, as learnt by
/// the nodes. `p[v]` must bound the size of `v`'s component.
pub fn boruvka_forest(s: &mut Session, active: &[bool], p: &[u64], ctx: u64) -> Result<Forest> {
    let g = s.graph;
    let out = s.run(1, |v| BoruvkaNode::new(g, active, v, p[v], ctx))?;
    let mut f = Forest::empty(g.n());
    for (v, prog) in out.programs.into_iter().enumerate() {
        if active[v] {
            let (root, parent, children, depth, size) = prog.into_parts();
            f.set(v, root, parent, children, depth, size);
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_graph, Edge, Family, GraphSpec, WeightMode};
    use crate::oracle::check_forest;
    use crate::sim::SimConfig;

    fn forest_of(g: &Graph, active: &[bool]) -> (Forest, crate::sim::RunReport) {
        let mut s = Session::new(g, SimConfig::congest(g));
        let f = boruvka_forest(&mut s, active, &vec![g.n() as u64; g.n()], 1).unwrap();
        (f, s.finish())
    }

    #[test]
    fn triangle_single_tree() {
        let g = Graph::new(3, vec![Edge { u: 0, v: 1, w: 1 }, Edge { u: 1, v: 2, w: 1 }, Edge { u: 0, v: 2, w: 1 }]).unwrap();
        let (f, _) = forest_of(&g, &[true; 3]);
        assert!(check_forest(&g, &[true; 3], &f).is_empty());
        assert_eq!(f.size, vec![3, 3, 3]);
        assert_eq!(f.root, vec![Some(0); 3]);
        assert_eq!(f.parent.iter().filter(|p| p.is_some()).count(), 2);
    }

    #[test]
    fn edgeless_singletons() {
        let g = Graph::new(3, vec![]).unwrap();
        let (f, r) = forest_of(&g, &[true; 3]);
        assert_eq!(f.size, vec![1, 1, 1]);
        assert_eq!(f.root, vec![Some(0), Some(1), Some(2)]);
        assert_eq!(r.messages, 0);
    }

    #[test]
    fn path_is_its_own_forest() {
        let g = gen_graph(&GraphSpec::new(Family::Path, 4, WeightMode::Unit, 0)).unwrap();
        let (f, _) = forest_of(&g, &[true; 4]);
        assert!(check_forest(&g, &[true; 4], &f).is_empty());
        assert_eq!(f.parent, vec![None, Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn random_graphs_with_masks() {
        for seed in 0..40 {
            let n = 10 + (seed as usize * 7) % 50;
            let g = gen_graph(&GraphSpec::new(Family::RandomGnm { m: n + n / 2 }, n, WeightMode::Uniform { max: 9 }, seed))
                .unwrap();
            let active: Vec<bool> = (0..n).map(|v| !(v * 31 + seed as usize).is_multiple_of(5)).collect();
            let (f, r) = forest_of(&g, &active);
            let v = check_forest(&g, &active, &f);
            assert!(v.is_empty(), "seed {seed}: {v:?}");
            assert!(r.max_congestion() <= 3 * (ceil_log2(n as u64) as u64 + 2));
        }
    }
}
