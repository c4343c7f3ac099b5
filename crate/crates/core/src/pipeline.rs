//! One-shot macro steps on rooted trees in the sleeping model: a single
//! round of neighbour exchange, a pipelined convergecast and a pipelined
//! broadcast. Every step runs as its own engine run padded to a fixed
//! window, so the session clock stays identical at every node.
//!
//! Within a window of length `p`, a node at depth `d` sends up in round
//! `p - d` and hears its children in round `p - d - 1`; going down it hears
//! its parent in round `d` and forwards in round `d + 1`. Each node is thus
//! awake at most twice per step.

use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::graph::NodeId;
use crate::sim::{Message, Outbox, Program, Session, Wake};

/// A rooted forest over the nodes with `on[v]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tree {
    pub parent: Vec<Option<NodeId>>,
    pub children: Vec<Vec<NodeId>>,
    pub depth: Vec<u32>,
    pub on: Vec<bool>,
}

impl Tree {
    pub fn from_forest(f: &Forest) -> Self {
        Tree {
            parent: f.parent.clone(),
            children: f.children.clone(),
            depth: f.depth.clone(),
            on: f.root.iter().map(Option::is_some).collect(),
        }
    }

    /// Every `on` node is its own root.
    pub fn singletons(on: &[bool]) -> Self {
        let n = on.len();
        Tree { parent: vec![None; n], children: vec![Vec::new(); n], depth: vec![0; n], on: on.to_vec() }
    }

    pub fn max_depth(&self) -> u32 {
        (0..self.on.len()).filter(|&v| self.on[v]).map(|v| self.depth[v]).max().unwrap_or(0)
    }

    /// Smallest window that fits every tree.
    pub fn window(&self) -> u64 {
        self.max_depth() as u64 + 1
    }

    /// Recomputes children and depths from parent pointers.
    pub fn rebuild(&mut self) -> Result<()> {
        let n = self.on.len();
        self.children = vec![Vec::new(); n];
        for v in 0..n {
            if let (true, Some(p)) = (self.on[v], self.parent[v]) {
                self.children[p].push(v);
            }
        }
        let mut stack: Vec<NodeId> = (0..n).filter(|&v| self.on[v] && self.parent[v].is_none()).collect();
        let mut seen = 0;
        for &r in &stack {
            self.depth[r] = 0;
        }
        while let Some(v) = stack.pop() {
            seen += 1;
            for i in 0..self.children[v].len() {
                let c = self.children[v][i];
                self.depth[c] = self.depth[v] + 1;
                stack.push(c);
            }
        }
        if seen != self.on.iter().filter(|x| **x).count() {
            return Err(Error::Protocol("parent pointers do not form a forest".into()));
        }
        Ok(())
    }
}

pub type Values = Vec<Vec<u64>>;

const T_EXCHANGE: u8 = 40;
const T_UP: u8 = 41;
const T_DOWN: u8 = 42;

struct Exchange {
    ctx: u64,
    awake: bool,
    send: Vec<(NodeId, Vec<u64>)>,
    got: Vec<(NodeId, Vec<u64>)>,
}

impl Program for Exchange {
    fn protocol(&self) -> &'static str {
        "exchange"
    }
    fn start(&mut self) -> Wake {
        if self.awake {
            Wake::At(1)
        } else {
            Wake::Done
        }
    }
    fn send(&mut self, _round: u64, out: &mut Outbox) {
        for (to, vals) in self.send.drain(..) {
            out.send(to, Message::new(T_EXCHANGE, vals).with_ctx(self.ctx));
        }
    }
    fn receive(&mut self, _round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        self.got.extend(inbox.iter().map(|(f, m)| (*f, m.payload.clone())));
        Wake::Done
    }
}

/// One round in which every node with `awake[v]` listens and sends
/// `msgs[v]`. Returns what each node heard, by sender.
pub fn exchange(
    s: &mut Session,
    awake: &[bool],
    msgs: Vec<Vec<(NodeId, Vec<u64>)>>,
    ctx: u64,
) -> Result<Vec<Vec<(NodeId, Vec<u64>)>>> {
    let mut msgs = msgs;
    let out = s.run_window(1, 1, |v| Exchange {
        ctx,
        awake: awake[v],
        send: std::mem::take(&mut msgs[v]),
        got: Vec::new(),
    })?;
    Ok(out.programs.into_iter().map(|p| p.got).collect())
}

struct Up<'a> {
    ctx: u64,
    window: u64,
    depth: u64,
    parent: Option<NodeId>,
    kids: usize,
    on: bool,
    acc: Vec<u64>,
    heard: Vec<(NodeId, Vec<u64>)>,
    combine: &'a dyn Fn(&mut Vec<u64>, &[u64]),
}

impl Up<'_> {
    fn send_round(&self) -> Wake {
        match self.parent {
            Some(_) => Wake::At(self.window - self.depth),
            None => Wake::Done,
        }
    }
}

impl Program for Up<'_> {
    fn protocol(&self) -> &'static str {
        "convergecast"
    }
    fn start(&mut self) -> Wake {
        if !self.on {
            Wake::Done
        } else if self.kids > 0 {
            Wake::At(self.window - self.depth - 1)
        } else {
            self.send_round()
        }
    }
    fn send(&mut self, round: u64, out: &mut Outbox) {
        if let (Some(p), true) = (self.parent, round == self.window - self.depth) {
            out.send(p, Message::new(T_UP, self.acc.clone()).with_ctx(self.ctx));
        }
    }
    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        for (from, m) in inbox {
            (self.combine)(&mut self.acc, &m.payload);
            self.heard.push((*from, m.payload.clone()));
        }
        if round < self.window - self.depth {
            self.send_round()
        } else {
            Wake::Done
        }
    }
}

/// Result of a convergecast: the subtree aggregate of every node and the
/// individual values its children reported.
pub struct Gathered {
    pub subtree: Values,
    pub from_children: Vec<Vec<(NodeId, Vec<u64>)>>,
}

/// Aggregates `own` up every tree with `combine` (which must be
/// associative and commutative) in one window.
pub fn convergecast(
    s: &mut Session,
    tree: &Tree,
    window: u64,
    own: Values,
    combine: &dyn Fn(&mut Vec<u64>, &[u64]),
    ctx: u64,
) -> Result<Gathered> {
    let window = window.max(tree.window());
    let mut own = own;
    let out = s.run_window(window, 1, |v| Up {
        ctx,
        window,
        depth: tree.depth[v] as u64,
        parent: tree.parent[v],
        kids: tree.children[v].len(),
        on: tree.on[v],
        acc: std::mem::take(&mut own[v]),
        heard: Vec::new(),
        combine,
    })?;
    let mut g = Gathered { subtree: Vec::new(), from_children: Vec::new() };
    for p in out.programs {
        g.subtree.push(p.acc);
        g.from_children.push(p.heard);
    }
    Ok(g)
}

struct Down<'a> {
    ctx: u64,
    v: NodeId,
    depth: u64,
    kids: Vec<NodeId>,
    on: bool,
    seed: Option<Vec<u64>>,
    value: Option<Vec<u64>>,
    map: &'a dyn Fn(NodeId, &[u64]) -> Vec<u64>,
}

impl Program for Down<'_> {
    fn protocol(&self) -> &'static str {
        "broadcast"
    }
    fn start(&mut self) -> Wake {
        if !self.on {
            return Wake::Done;
        }
        match self.seed.take() {
            Some(seed) => {
                self.value = Some((self.map)(self.v, &seed));
                if self.kids.is_empty() {
                    Wake::Done
                } else {
                    Wake::At(1)
                }
            }
            None if self.depth > 0 => Wake::At(self.depth),
            None => Wake::Done,
        }
    }
    fn send(&mut self, _round: u64, out: &mut Outbox) {
        if let Some(val) = &self.value {
            for &c in &self.kids {
                out.send(c, Message::new(T_DOWN, val.clone()).with_ctx(self.ctx));
            }
        }
    }
    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        if self.value.is_none() {
            if let Some((_, m)) = inbox.first() {
                self.value = Some((self.map)(self.v, &m.payload));
            }
        }
        if round == self.depth && self.value.is_some() && !self.kids.is_empty() {
            Wake::At(round + 1)
        } else {
            Wake::Done
        }
    }
}

/// Sends values down every tree in one window. A root adopts
/// `map(root, seed)`; every other node adopts `map(v, parent's value)`.
/// Returns the adopted values (empty where none arrived).
pub fn broadcast(
    s: &mut Session,
    tree: &Tree,
    window: u64,
    seeds: Vec<Option<Vec<u64>>>,
    map: &dyn Fn(NodeId, &[u64]) -> Vec<u64>,
    ctx: u64,
) -> Result<Values> {
    let window = window.max(tree.window());
    let mut seeds = seeds;
    let out = s.run_window(window, 1, |v| Down {
        ctx,
        v,
        depth: tree.depth[v] as u64,
        kids: tree.children[v].clone(),
        on: tree.on[v],
        seed: if tree.parent[v].is_none() { seeds[v].take() } else { None },
        value: None,
        map,
    })?;
    Ok(out.programs.into_iter().map(|p| p.value.unwrap_or_default()).collect())
}

/// Convergecast followed by a broadcast of the root aggregate: every node
/// learns its tree's total.
pub fn allreduce(
    s: &mut Session,
    tree: &Tree,
    window: u64,
    own: Values,
    combine: &dyn Fn(&mut Vec<u64>, &[u64]),
    ctx: u64,
) -> Result<Values> {
    let up = convergecast(s, tree, window, own, combine, ctx)?;
    let seeds = (0..tree.on.len())
        .map(|v| (tree.on[v] && tree.parent[v].is_none()).then(|| up.subtree[v].clone()))
        .collect();
    broadcast(s, tree, window, seeds, &|_, x| x.to_vec(), ctx)
}

/// Elementwise minimum, where an empty vector is the neutral element.
pub fn min_combine(acc: &mut Vec<u64>, x: &[u64]) {
    if x.is_empty() {
        return;
    }
    if acc.is_empty() || x < acc.as_slice() {
        *acc = x.to_vec();
    }
}

/// Lexicographic maximum, empty is neutral.
pub fn max_combine(acc: &mut Vec<u64>, x: &[u64]) {
    if x > acc.as_slice() {
        *acc = x.to_vec();
    }
}

/// Elementwise sum of equal-length vectors, empty is neutral.
pub fn sum_combine(acc: &mut Vec<u64>, x: &[u64]) {
    if acc.is_empty() {
        *acc = x.to_vec();
    } else {
        for (a, b) in acc.iter_mut().zip(x) {
            *a += b;
        }
    }
}

/// A node's place in one of several overlapping trees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub tree: u64,
    pub parent: Option<NodeId>,
    pub depth: u32,
    pub kids: Vec<NodeId>,
}

const T_MUP: u8 = 43;
const T_MDOWN: u8 = 44;

struct MultiUp<'a> {
    ctx: u64,
    window: u64,
    slots: Vec<Slot>,
    acc: Vec<Vec<u64>>,
    combine: &'a dyn Fn(&mut Vec<u64>, &[u64]),
}

impl MultiUp<'_> {
    fn next(&self, round: u64) -> Wake {
        let mut best = None::<u64>;
        for s in &self.slots {
            let d = s.depth as u64;
            let mut cand = Vec::with_capacity(2);
            if !s.kids.is_empty() {
                cand.push(self.window - d - 1);
            }
            if s.parent.is_some() {
                cand.push(self.window - d);
            }
            for r in cand.into_iter().filter(|&r| r > round) {
                best = Some(best.map_or(r, |b| b.min(r)));
            }
        }
        best.map_or(Wake::Done, Wake::At)
    }
}

impl Program for MultiUp<'_> {
    fn protocol(&self) -> &'static str {
        "multi-convergecast"
    }
    fn start(&mut self) -> Wake {
        self.next(0)
    }
    fn send(&mut self, round: u64, out: &mut Outbox) {
        for (i, s) in self.slots.iter().enumerate() {
            if let (Some(p), true) = (s.parent, round == self.window - s.depth as u64) {
                let mut payload = vec![s.tree];
                payload.extend_from_slice(&self.acc[i]);
                out.send(p, Message::new(T_MUP, payload).with_ctx(self.ctx));
            }
        }
    }
    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        for (_, m) in inbox {
            if let Some(i) = self.slots.iter().position(|s| s.tree == m.payload[0]) {
                (self.combine)(&mut self.acc[i], &m.payload[1..]);
            }
        }
        self.next(round)
    }
}

/// [`convergecast`] over many overlapping trees at once; a channel may
/// carry one message per tree, so the run uses megaround width `width`.
/// Returns the subtree aggregate of every node in every one of its slots.
#[allow(clippy::too_many_arguments)]
pub fn multi_convergecast(
    s: &mut Session,
    slots: &[Vec<Slot>],
    window: u64,
    width: u64,
    own: Vec<Values>,
    combine: &dyn Fn(&mut Vec<u64>, &[u64]),
    ctx: u64,
) -> Result<Vec<Values>> {
    let deepest = slots.iter().flatten().map(|s| s.depth as u64 + 1).max().unwrap_or(1);
    let window = window.max(deepest);
    let mut own = own;
    let out = s.run_window(window, width, |v| MultiUp {
        ctx,
        window,
        slots: slots[v].clone(),
        acc: std::mem::take(&mut own[v]),
        combine,
    })?;
    Ok(out.programs.into_iter().map(|p| p.acc).collect())
}

struct MultiDown<'a> {
    ctx: u64,
    v: NodeId,
    slots: Vec<Slot>,
    value: Vec<Option<Vec<u64>>>,
    map: &'a dyn Fn(NodeId, u64, &[u64]) -> Vec<u64>,
}

impl MultiDown<'_> {
    fn next(&self, round: u64) -> Wake {
        let mut best = None::<u64>;
        for (i, s) in self.slots.iter().enumerate() {
            let d = s.depth as u64;
            let mut cand = Vec::with_capacity(2);
            if s.parent.is_some() {
                cand.push(d);
            }
            if !s.kids.is_empty() && (s.parent.is_some() || self.value[i].is_some()) {
                cand.push(d + 1);
            }
            for r in cand.into_iter().filter(|&r| r > round) {
                best = Some(best.map_or(r, |b| b.min(r)));
            }
        }
        best.map_or(Wake::Done, Wake::At)
    }
}

impl Program for MultiDown<'_> {
    fn protocol(&self) -> &'static str {
        "multi-broadcast"
    }
    fn start(&mut self) -> Wake {
        self.next(0)
    }
    fn send(&mut self, round: u64, out: &mut Outbox) {
        for (i, s) in self.slots.iter().enumerate() {
            if round != s.depth as u64 + 1 {
                continue;
            }
            if let Some(val) = &self.value[i] {
                for &c in &s.kids {
                    let mut payload = vec![s.tree];
                    payload.extend_from_slice(val);
                    out.send(c, Message::new(T_MDOWN, payload).with_ctx(self.ctx));
                }
            }
        }
    }
    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        for (_, m) in inbox {
            if let Some(i) = self.slots.iter().position(|s| s.tree == m.payload[0]) {
                if self.value[i].is_none() {
                    self.value[i] = Some((self.map)(self.v, m.payload[0], &m.payload[1..]));
                }
            }
        }
        self.next(round)
    }
}

/// [`broadcast`] over many overlapping trees at once. Roots adopt
/// `map(root, tree, seed)`, other nodes `map(v, tree, parent's value)`.
#[allow(clippy::too_many_arguments)]
pub fn multi_broadcast(
    s: &mut Session,
    slots: &[Vec<Slot>],
    window: u64,
    width: u64,
    seeds: Vec<Vec<Option<Vec<u64>>>>,
    map: &dyn Fn(NodeId, u64, &[u64]) -> Vec<u64>,
    ctx: u64,
) -> Result<Vec<Vec<Option<Vec<u64>>>>> {
    let deepest = slots.iter().flatten().map(|s| s.depth as u64 + 1).max().unwrap_or(1);
    let window = window.max(deepest);
    let mut seeds = seeds;
    let out = s.run_window(window, width, |v| {
        let value = slots[v]
            .iter()
            .zip(std::mem::take(&mut seeds[v]))
            .map(|(s, seed)| if s.parent.is_none() { seed.map(|x| map(v, s.tree, &x)) } else { None })
            .collect();
        MultiDown { ctx, v, slots: slots[v].clone(), value, map }
    })?;
    Ok(out.programs.into_iter().map(|p| p.value).collect())
}

/// Smallest round strictly after `after` congruent to `residue` mod `p`.
pub fn next_slot(residue: u64, p: u64, after: u64) -> u64 {
    let p = p.max(1);
    let r = residue % p;
    let base = after + 1;
    base + (r + p - base % p) % p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_graph, Family, Graph, GraphSpec, WeightMode};
    use crate::sim::SimConfig;

    fn path_tree(n: usize) -> Tree {
        let mut t = Tree::singletons(&vec![true; n]);
        for v in 1..n {
            t.parent[v] = Some(v - 1);
        }
        t.rebuild().unwrap();
        t
    }

    #[test]
    fn sum_and_broadcast_on_a_path() {
        let g = gen_graph(&GraphSpec::new(Family::Path, 6, WeightMode::Unit, 0)).unwrap();
        let t = path_tree(6);
        let mut s = Session::new(&g, SimConfig::sleeping(&g));
        let vals = (0..6).map(|v| vec![v as u64]).collect();
        let all = allreduce(&mut s, &t, 8, vals, &sum_combine, 0).unwrap();
        assert!(all.iter().all(|x| x == &vec![15]));
        let r = s.finish();
        assert_eq!(r.rounds, 16);
        assert!(r.max_energy() <= 4);
        assert_eq!(r.lost, 0);
    }

    #[test]
    fn broadcast_map_accumulates_depth() {
        let g = gen_graph(&GraphSpec::new(Family::Path, 5, WeightMode::Unit, 0)).unwrap();
        let t = path_tree(5);
        let mut s = Session::new(&g, SimConfig::sleeping(&g));
        let mut seeds = vec![None; 5];
        seeds[0] = Some(vec![10]);
        let got = broadcast(&mut s, &t, 5, seeds, &|_, x| vec![x[0] + 1], 0).unwrap();
        assert_eq!(got, vec![vec![11], vec![12], vec![13], vec![14], vec![15]]);
    }

    #[test]
    fn exchange_reaches_awake_neighbours_only() {
        let g = Graph::new(3, vec![crate::graph::Edge { u: 0, v: 1, w: 1 }, crate::graph::Edge { u: 1, v: 2, w: 1 }])
            .unwrap();
        let mut s = Session::new(&g, SimConfig::sleeping(&g));
        let msgs = vec![vec![(1, vec![7])], vec![(0, vec![8]), (2, vec![9])], vec![]];
        let got = exchange(&mut s, &[true, true, false], msgs, 0).unwrap();
        assert_eq!(got[0], vec![(1, vec![8])]);
        assert_eq!(got[1], vec![(0, vec![7])]);
        assert!(got[2].is_empty());
        assert_eq!(s.finish().lost, 1);
    }

    #[test]
    fn overlapping_trees_sum_separately() {
        let g = gen_graph(&GraphSpec::new(Family::Path, 4, WeightMode::Unit, 0)).unwrap();
        // tree 7 rooted at 0 over 0-1-2, tree 9 rooted at 3 over 3-2-1
        let slot = |tree, parent, depth, kids: Vec<NodeId>| Slot { tree, parent, depth, kids };
        let slots = vec![
            vec![slot(7, None, 0, vec![1])],
            vec![slot(7, Some(0), 1, vec![2]), slot(9, Some(2), 2, vec![])],
            vec![slot(7, Some(1), 2, vec![]), slot(9, Some(3), 1, vec![1])],
            vec![slot(9, None, 0, vec![2])],
        ];
        let own = vec![vec![vec![1]], vec![vec![2], vec![20]], vec![vec![3], vec![30]], vec![vec![40]]];
        let mut s = Session::new(&g, SimConfig::sleeping(&g));
        let agg = multi_convergecast(&mut s, &slots, 3, 2, own, &sum_combine, 0).unwrap();
        assert_eq!(agg[0][0], vec![6]);
        assert_eq!(agg[3][0], vec![90]);
        let seeds = vec![vec![Some(vec![0])], vec![None, None], vec![None, None], vec![Some(vec![100])]];
        let down = multi_broadcast(&mut s, &slots, 3, 2, seeds, &|_, _, x| vec![x[0] + 1], 0).unwrap();
        assert_eq!(down[2], vec![Some(vec![3]), Some(vec![102])]);
        assert_eq!(down[1], vec![Some(vec![2]), Some(vec![103])]);
        assert_eq!(s.finish().lost, 0);
    }

    #[test]
    fn slots() {
        assert_eq!(next_slot(3, 5, 0), 3);
        assert_eq!(next_slot(3, 5, 3), 8);
        assert_eq!(next_slot(0, 5, 4), 5);
        assert_eq!(next_slot(7, 1, 9), 10);
    }
}
