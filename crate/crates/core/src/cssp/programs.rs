//! Per-node programs for the steps of one recursion frame.

use std::collections::BTreeMap;

use crate::forest::{active_nbrs, Forest};
use crate::graph::{Graph, NodeId, Weight};
use crate::sim::{Message, Outbox, Program, Wake};

const T_SOURCE: u8 = 1;
const T_TICK: u8 = 2;
const T_DONE: u8 = 3;
const T_START: u8 = 4;
const T_DIST: u8 = 5;

/// Base case of threshold 1: sources tell their neighbours in one round.
pub struct BaseCase {
    ctx: u64,
    nbrs: Vec<(NodeId, Weight)>,
    offset: Option<u64>,
    participating: bool,
    pub output: Option<u64>,
}

impl BaseCase {
    pub fn new(g: &Graph, active: &[bool], offsets: &[Option<u64>], v: NodeId, ctx: u64) -> Self {
        let participating = active[v];
        BaseCase {
            ctx,
            nbrs: if participating { active_nbrs(g, active, v) } else { Vec::new() },
            offset: offsets[v],
            participating,
            output: if participating { offsets[v].filter(|&o| o <= 1) } else { None },
        }
    }
}

impl Program for BaseCase {
    fn protocol(&self) -> &'static str {
        "cssp-base"
    }

    fn start(&mut self) -> Wake {
        if self.participating {
            Wake::At(1)
        } else {
            Wake::Done
        }
    }

    fn send(&mut self, _round: u64, out: &mut Outbox) {
        if self.offset == Some(0) {
            for &(u, _) in &self.nbrs {
                out.send(u, Message::new(T_SOURCE, vec![]).with_ctx(self.ctx));
            }
        }
    }

    fn receive(&mut self, _round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        for (from, _) in inbox {
            let w = self.nbrs.iter().find(|(u, _)| u == from).map(|(_, w)| *w);
            if w == Some(1) && self.output.is_none() {
                self.output = Some(1);
            }
        }
        Wake::Done
    }
}

/// Ticks needed for weight `w` when one tick is `d / (2c)`: `ceil(2cw / d)`.
pub fn ticks_for(w: u64, c: u64, d: u64) -> u64 {
    let num = 2 * c as u128 * w as u128;
    num.div_ceil(d as u128) as u64
}

/// Rounding cutter: a weighted BFS in ticks where an edge of rounded weight
/// `a` ticks delays the wave by `a` rounds, run for `6c` ticks (three times
/// the threshold). Each node sends once.
pub struct Cutter {
    ctx: u64,
    /// Neighbours with their edge lengths in ticks.
    nbrs: Vec<(NodeId, u64)>,
    horizon: u64,
    best: Option<u64>,
    pub ticks: Option<u64>,
    participating: bool,
}

impl Cutter {
    /// `c` is the component size known from the forest, `d` the threshold.
    pub fn new(g: &Graph, active: &[bool], offsets: &[Option<u64>], forest: &Forest, d: u64, v: NodeId, ctx: u64) -> Self {
        let participating = active[v];
        let c = forest.size[v].max(1);
        let nbrs = if participating {
            active_nbrs(g, active, v).into_iter().map(|(u, w)| (u, ticks_for(w, c, d))).collect()
        } else {
            Vec::new()
        };
        Cutter {
            ctx,
            nbrs,
            horizon: 6 * c,
            best: offsets[v].map(|o| ticks_for(o, c, d)),
            ticks: None,
            participating,
        }
    }

    fn wake(&self, round: u64) -> Wake {
        match self.best {
            Some(b) if self.ticks.is_none() && b < self.horizon && b + 1 > round => Wake::At(b + 1),
            _ if round < self.horizon => Wake::At(self.horizon),
            _ => Wake::Done,
        }
    }
}

impl Program for Cutter {
    fn protocol(&self) -> &'static str {
        "cssp-cutter"
    }

    fn start(&mut self) -> Wake {
        if self.participating {
            self.wake(0)
        } else {
            Wake::Done
        }
    }

    fn send(&mut self, round: u64, out: &mut Outbox) {
        let tick = round - 1;
        if self.ticks.is_none() && self.best == Some(tick) && tick < self.horizon {
            self.ticks = Some(tick);
            for &(u, _) in &self.nbrs {
                out.send(u, Message::new(T_TICK, vec![]).with_ctx(self.ctx));
            }
        }
    }

    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        let tick = round - 1;
        for (from, _) in inbox {
            if let Some(&(_, a)) = self.nbrs.iter().find(|(u, _)| u == from) {
                let cand = tick + a;
                if self.best.is_none_or(|b| cand < b) {
                    self.best = Some(cand);
                }
            }
        }
        self.wake(round)
    }
}

/// Completion barrier over the forest followed by the cut exchange.
///
/// Every node reports done to its parent once its subtree has; the root
/// picks a start round `gap * |C|` ahead and broadcasts it; in the start
/// round the nodes within the half threshold send their distances to all
/// neighbours, from which the others derive their new source offsets.
pub struct BarrierExchange {
    ctx: u64,
    clock: u64,
    nbrs: Vec<(NodeId, Weight)>,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    waiting: usize,
    size: u64,
    gap: u64,
    half: u64,
    near: Option<u64>,
    far: bool,
    start_at: Option<u64>,
    pending: BTreeMap<u64, Vec<(NodeId, Message)>>,
    pub new_offset: Option<u64>,
    participating: bool,
}

/// Inputs of one node to [`BarrierExchange`].
#[derive(Clone, Copy, Debug)]
pub struct CutInput {
    /// Output of the first half-threshold call, if within it.
    pub near: Option<u64>,
    /// Whether the node takes part in the second call.
    pub far: bool,
    pub old_offset: Option<u64>,
}

impl BarrierExchange {
    /// `clock` converts run-local rounds to session rounds in the start message.
    #[allow(clippy::too_many_arguments)]
    pub fn new(g: &Graph, active: &[bool], forest: &Forest, v: NodeId, cut: CutInput, half: u64, gap: u64, clock: u64, ctx: u64) -> Self {
        let participating = active[v];
        BarrierExchange {
            ctx,
            clock,
            nbrs: if participating { active_nbrs(g, active, v) } else { Vec::new() },
            parent: forest.parent[v],
            children: forest.children[v].clone(),
            waiting: forest.children[v].len(),
            size: forest.size[v].max(1),
            gap,
            half,
            near: cut.near,
            far: cut.far,
            start_at: None,
            pending: BTreeMap::new(),
            new_offset: if cut.far { cut.old_offset.filter(|&o| o > half).map(|o| o - half) } else { None },
            participating,
        }
    }

    fn queue(&mut self, round: u64, to: NodeId, m: Message) {
        self.pending.entry(round).or_default().push((to, m.with_ctx(self.ctx)));
    }

    fn subtree_done(&mut self, round: u64) {
        match self.parent {
            Some(p) => self.queue(round, p, Message::new(T_DONE, vec![])),
            None => {
                let start = round + self.gap * self.size;
                self.set_start(start, round);
            }
        }
    }

    fn set_start(&mut self, start: u64, round: u64) {
        self.start_at = Some(start);
        for c in self.children.clone() {
            self.queue(round + 1, c, Message::new(T_START, vec![start + self.clock]));
        }
    }
}

impl Program for BarrierExchange {
    fn protocol(&self) -> &'static str {
        "cssp-barrier"
    }

    fn start(&mut self) -> Wake {
        if !self.participating {
            return Wake::Done;
        }
        if self.waiting == 0 {
            self.subtree_done(1);
        }
        Wake::At(1)
    }

    fn send(&mut self, round: u64, out: &mut Outbox) {
        for (to, m) in self.pending.remove(&round).unwrap_or_default() {
            out.send(to, m);
        }
        if self.start_at == Some(round) {
            if let Some(d) = self.near {
                for &(u, _) in &self.nbrs {
                    out.send(u, Message::new(T_DIST, vec![d]).with_ctx(self.ctx));
                }
            }
        }
    }

    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        for (from, m) in inbox {
            match m.tag {
                T_DONE => {
                    self.waiting -= 1;
                    if self.waiting == 0 {
                        self.subtree_done(round + 1);
                    }
                }
                T_START => self.set_start(m.payload[0] - self.clock, round),
                T_DIST if self.far => {
                    let w = self.nbrs.iter().find(|(u, _)| u == from).map_or(0, |(_, w)| *w);
                    let o = m.payload[0] + w - self.half;
                    self.new_offset = Some(self.new_offset.map_or(o, |x| x.min(o)));
                }
                _ => {}
            }
        }
        let next = self.pending.keys().next().copied().into_iter().chain(self.start_at.filter(|&s| s > round)).min();
        match (next, self.start_at) {
            (Some(r), _) => Wake::At(r),
            (None, Some(_)) => Wake::Done,
            (None, None) => Wake::Idle,
        }
    }
}
