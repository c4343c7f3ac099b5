//! Thresholded BFS driven by a layered cover, in the sleeping model.
//!
//! One engine run. First every cluster above the lowest used level runs a
//! single convergecast-broadcast cycle telling its nodes whether it holds a
//! source. Then the wave starts: a node at distance `δ` is reached in round
//! `I + σδ`, and a reached node wakes once per incident edge of length `a`
//! to hand the wave over in round `I + σ(δ + a)`. Clusters pipeline sticky
//! aggregates with period `B^j`: whether any member was reached, whether all
//! tree nodes know it, whether all members were reached. A cluster that
//! learns it was reached activates its children; it retires once all its
//! nodes know (the lowest level once every member is reached). Nodes listen
//! for the wave in every round in which one of their lowest-level clusters
//! is active.
//!
//! Edge lengths are the session graph's weights. With long edges the lowest
//! levels cannot be activated in time, so the run starts at the first level
//! whose scale dwarfs the longest edge.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cover::{edge_tree_multiplicity, LayeredCover};
use crate::decomp::{Mode, Reach};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::pipeline::next_slot;
use crate::sim::{LostMessage, Message, Outbox, Program, Session, Wake};

const T_BFS: u8 = 30;
const T_INIT_UP: u8 = 31;
const T_INIT_DOWN: u8 = 32;
const T_UP: u8 = 33;
const T_DOWN: u8 = 34;

/// A wave source: its label, its distance offset and its hop count so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seed {
    pub label: u64,
    pub offset: u64,
    pub hops: u32,
}

impl Seed {
    pub fn new(label: u64) -> Self {
        Seed { label, offset: 0, hops: 0 }
    }
}

/// Timing constants of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BfsPlan {
    /// Rounds per unit of distance.
    pub sigma: u64,
    /// Lowest cover level used.
    pub lowest: usize,
    /// Length of the initialization; the wave starts in round `init`.
    pub init: u64,
    /// Megaround width.
    pub width: u64,
    pub threshold: u64,
    /// Last round of the run.
    pub end: u64,
}

/// Smallest level `j` whose parent scale leaves at least half its slack
/// after an entry over an edge of length `a_max`.
pub fn lowest_level(base: u64, top: usize, a_max: u64) -> usize {
    (0..top)
        .find(|&j| {
            let half = base.saturating_pow(j as u32 + 1) / 2;
            a_max.saturating_sub(1) <= half / 2
        })
        .unwrap_or(top)
}

fn period(lc: &LayeredCover, j: usize, lowest: usize) -> u64 {
    if j == lowest {
        1
    } else {
        lc.scale(j)
    }
}

/// Chooses `σ`, the lowest level, the initialization length and the width.
pub fn plan(lc: &LayeredCover, a_max: u64, threshold: u64, mode: Mode) -> Result<BfsPlan> {
    let top = lc.top();
    let lowest = lowest_level(lc.base, top, a_max);
    let mut sigma = match mode {
        Mode::Worst => 8 * lc.base,
        Mode::Scaled => 1,
    };
    for j in lowest..top {
        let slack = (lc.scale(j + 1) / 2 + 1).saturating_sub(a_max).max(1);
        let need = 2 * (period(lc, j + 1, lowest) + lc.levels[j + 1].max_depth() as u64) + 1;
        let min = need.div_ceil(slack);
        if mode == Mode::Worst && sigma < min {
            return Err(Error::Construction(format!("worst-case slowdown {sigma} below the required {min}")));
        }
        sigma = sigma.max(min);
    }
    let mut init = 1;
    for j in lowest + 1..=top {
        let p = period(lc, j, lowest);
        for c in &lc.levels[j].clusters {
            let d = c.depth() as u64;
            init = init.max((d + 1).div_ceil(p) * p + d + 2);
        }
    }
    let width = edge_tree_multiplicity(lc.levels[lowest..].iter().flat_map(|l| &l.clusters)).into_values().max().unwrap_or(0)
        as u64
        + 1;
    let end = init + sigma * threshold + 1;
    Ok(BfsPlan { sigma, lowest, init, width, threshold, end })
}

#[derive(Clone, Debug)]
struct Member {
    cid: u64,
    lowest: bool,
    period: u64,
    depth: u64,
    parent: Option<NodeId>,
    kids: Vec<NodeId>,
    terminal: bool,
    /// Index (into the node's memberships) of the parent cluster.
    up_link: Option<usize>,
    init_t: u64,
    has_source: bool,
    relevant: bool,
    active: bool,
    know: bool,
    kid_any: Vec<NodeId>,
    kid_know: Vec<NodeId>,
    kid_all: Vec<NodeId>,
    decision: Option<(bool, bool)>,
    leave_after: Option<u64>,
}

impl Member {
    /// Sticky subtree aggregates: any reached, all know, all reached.
    fn agg(&self, reached: bool) -> (bool, bool, bool) {
        let any = (self.terminal && reached) || !self.kid_any.is_empty();
        let know = self.know && self.kid_know.len() == self.kids.len();
        let all = (!self.terminal || reached) && self.kid_all.len() == self.kids.len();
        (any, know, all)
    }

    fn init_rounds(&self) -> [Option<u64>; 4] {
        let (t, d) = (self.init_t, self.depth);
        let kids = !self.kids.is_empty();
        let par = self.parent.is_some();
        [kids.then(|| t - d - 1), par.then(|| t - d), par.then(|| t + d), kids.then(|| t + d + 1)]
    }

    fn up_residue(&self) -> u64 {
        (self.period - self.depth % self.period) % self.period
    }

    fn down_residue(&self) -> u64 {
        (self.depth + 1) % self.period
    }
}

fn mark(list: &mut Vec<NodeId>, v: NodeId) {
    if !list.contains(&v) {
        list.push(v);
    }
}

struct Node {
    ctx: u64,
    plan: BfsPlan,
    nbrs: Vec<(NodeId, u64)>,
    members: Vec<Member>,
    init_done: bool,
    source: Option<Seed>,
    reach: Option<Reach>,
    reached_at: Option<u64>,
    sends: BTreeMap<u64, Vec<NodeId>>,
}

impl Node {
    fn reached_by(&self, round: u64) -> bool {
        self.reached_at.is_some_and(|r| r <= round)
    }

    fn schedule_sends(&mut self) {
        self.sends.clear();
        let Some(r) = self.reach else { return };
        let p = self.plan;
        for &(u, a) in &self.nbrs {
            if Some(u) != r.parent && r.dist + a <= p.threshold {
                self.sends.entry(p.init + p.sigma * (r.dist + a)).or_default().push(u);
            }
        }
    }

    fn next_wake(&self, round: u64) -> Wake {
        let p = self.plan;
        let mut best = u64::MAX;
        let mut consider = |r: u64| {
            if r > round && r < best {
                best = r;
            }
        };
        if round < p.init {
            for m in self.members.iter().filter(|m| !m.lowest) {
                m.init_rounds().into_iter().flatten().for_each(&mut consider);
            }
            consider(p.init);
        } else {
            for m in self.members.iter().filter(|m| m.active) {
                if m.lowest {
                    consider(round + 1);
                    continue;
                }
                if !m.kids.is_empty() {
                    consider(next_slot(m.period - 1 - m.depth % m.period, m.period, round));
                    consider(next_slot(m.down_residue(), m.period, round));
                }
                if m.parent.is_some() {
                    consider(next_slot(m.up_residue(), m.period, round));
                    consider(next_slot(m.depth, m.period, round));
                }
                if let Some(r) = m.leave_after {
                    consider(r);
                }
            }
        }
        if let Some(&r) = self.sends.keys().next() {
            consider(r);
        }
        if let (Some(sd), None) = (self.source, self.reached_at) {
            consider(p.init + p.sigma * sd.offset);
        }
        if best > p.end {
            Wake::Done
        } else {
            Wake::At(best)
        }
    }

    fn activate_children(&mut self, idx: usize) {
        for m in self.members.iter_mut() {
            if m.up_link == Some(idx) && m.relevant {
                m.active = true;
            }
        }
    }

    /// Relevance and initial activity from the initialization cycle.
    fn finish_init(&mut self) {
        self.init_done = true;
        let single = self.members.iter().all(|m| m.lowest);
        for i in 0..self.members.len() {
            let mut j = i;
            while let Some(up) = self.members[j].up_link {
                j = up;
            }
            let relevant = single || self.members[j].has_source;
            let parent_has = self.members[i].up_link.is_none_or(|up| self.members[up].has_source);
            let m = &mut self.members[i];
            m.relevant = relevant;
            m.active = relevant && parent_has;
        }
    }
}

impl Program for Node {
    fn protocol(&self) -> &'static str {
        "cover-bfs"
    }

    fn start(&mut self) -> Wake {
        if let Some(sd) = self.source {
            self.reach = Some(Reach { dist: sd.offset, label: sd.label, parent: None, hops: sd.hops });
            self.schedule_sends();
        }
        self.next_wake(0)
    }

    fn send(&mut self, round: u64, out: &mut Outbox) {
        let p = self.plan;
        if round >= p.init && !self.init_done {
            self.finish_init();
        }
        if let Some(to) = self.sends.remove(&round) {
            let r = self.reach.expect("scheduled sends imply a reach");
            for u in to {
                out.send(u, Message::new(T_BFS, vec![r.label, r.hops as u64 + 1]).with_ctx(self.ctx));
            }
        }
        let reached = self.reached_by(round);
        for m in &self.members {
            if round < p.init {
                if m.lowest {
                    continue;
                }
                let [_, up, _, down] = m.init_rounds();
                if up == Some(round) {
                    let msg = Message::new(T_INIT_UP, vec![m.cid, m.has_source as u64]);
                    out.send(m.parent.unwrap(), msg.with_ctx(self.ctx));
                }
                if down == Some(round) {
                    for &k in &m.kids {
                        let msg = Message::new(T_INIT_DOWN, vec![m.cid, m.has_source as u64]);
                        out.send(k, msg.with_ctx(self.ctx));
                    }
                }
                continue;
            }
            if !m.active {
                continue;
            }
            if let Some(par) = m.parent {
                if round % m.period == m.up_residue() {
                    let (a, k, l) = m.agg(reached);
                    let msg = Message::new(T_UP, vec![m.cid, a as u64 | (k as u64) << 1 | (l as u64) << 2]);
                    out.send(par, msg.with_ctx(self.ctx));
                }
            }
            if let Some((r, x)) = m.decision {
                if round % m.period == m.down_residue() {
                    for &k in &m.kids {
                        let msg = Message::new(T_DOWN, vec![m.cid, r as u64 | (x as u64) << 1]);
                        out.send(k, msg.with_ctx(self.ctx));
                    }
                }
            }
        }
    }

    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        let p = self.plan;
        let mut best: Option<(u64, NodeId, u64)> = None;
        for (from, m) in inbox.iter().filter(|(_, m)| m.tag == T_BFS) {
            if best.is_none_or(|b| (m.payload[0], *from) < (b.0, b.1)) {
                best = Some((m.payload[0], *from, m.payload[1]));
            }
        }
        if let (Some((label, from, hops)), None) = (best, self.reached_at) {
            debug_assert_eq!((round - p.init) % p.sigma, 0);
            let dist = (round - p.init) / p.sigma;
            let better = self.reach.is_none_or(|r| (dist, label) < (r.dist, r.label));
            if better {
                self.reach = Some(Reach { dist, label, parent: Some(from), hops: hops as u32 });
                self.schedule_sends();
            }
            self.reached_at = Some(round);
        }
        if let (Some(sd), None) = (self.source, self.reached_at) {
            if round >= p.init + p.sigma * sd.offset {
                self.reached_at = Some(p.init + p.sigma * sd.offset);
            }
        }
        let reached = self.reached_by(round);

        for (from, msg) in inbox.iter().filter(|(_, m)| m.tag != T_BFS) {
            let Some(i) = self.members.iter().position(|m| m.cid == msg.payload[0]) else { continue };
            let bits = msg.payload[1];
            let m = &mut self.members[i];
            match msg.tag {
                T_INIT_UP => m.has_source |= bits == 1,
                T_INIT_DOWN => m.has_source = bits == 1,
                T_UP if m.active => {
                    if bits & 1 == 1 {
                        mark(&mut m.kid_any, *from);
                    }
                    if bits & 2 == 2 {
                        mark(&mut m.kid_know, *from);
                    }
                    if bits & 4 == 4 {
                        mark(&mut m.kid_all, *from);
                    }
                }
                T_DOWN if m.active => {
                    let (r, x) = (bits & 1 == 1, bits & 2 == 2);
                    m.decision = Some((r, x));
                    if x && m.leave_after.is_none() {
                        m.leave_after = Some(if m.kids.is_empty() { round } else { round + 1 });
                    }
                    if r && !m.know {
                        m.know = true;
                        self.activate_children(i);
                    }
                }
                _ => {}
            }
        }

        if round >= p.init {
            for i in 0..self.members.len() {
                let m = &self.members[i];
                if !m.active || m.parent.is_some() || m.leave_after.is_some() {
                    continue;
                }
                let (any, know, all) = m.agg(reached);
                let retire = if m.lowest { all } else { any && know };
                let first = any && !m.know;
                let m = &mut self.members[i];
                m.decision = Some((any, retire));
                if retire {
                    m.leave_after = Some(if m.kids.is_empty() { round } else { next_slot(1, m.period, round) });
                }
                if first {
                    m.know = true;
                    self.activate_children(i);
                }
            }
        }

        for m in self.members.iter_mut() {
            if m.leave_after.is_some_and(|r| r <= round) {
                m.active = false;
            }
        }
        self.next_wake(round)
    }
}

/// Outcome of one cover-driven BFS run.
#[derive(Clone, Debug)]
pub struct CoverBfs {
    pub reach: Vec<Option<Reach>>,
    pub plan: BfsPlan,
    /// Wave messages that hit a sleeping, unreached node.
    pub violations: Vec<LostMessage>,
}

/// Runs the wave from `sources` up to distance
/// `threshold`. A node reached while asleep is a protocol error.
pub fn cover_bfs(
    s: &mut Session,
    lc: &LayeredCover,
    sources: &[Option<Seed>],
    threshold: u64,
    mode: Mode,
    ctx: u64,
) -> Result<CoverBfs> {
    let out = cover_bfs_unchecked(s, lc, sources, threshold, mode, ctx)?;
    if let Some(v) = out.violations.first() {
        return Err(Error::Protocol(format!(
            "sleep-safety: wave reached sleeping node {} from {} in round {} ({} such messages)",
            v.to,
            v.from,
            v.round,
            out.violations.len()
        )));
    }
    Ok(out)
}

/// [`cover_bfs`] that reports sleep-safety violations instead of failing.
pub fn cover_bfs_unchecked(
    s: &mut Session,
    lc: &LayeredCover,
    sources: &[Option<Seed>],
    threshold: u64,
    mode: Mode,
    ctx: u64,
) -> Result<CoverBfs> {
    let g = s.graph;
    let n = g.n();
    let sources: Vec<Option<Seed>> = sources.iter().map(|x| x.filter(|sd| sd.offset <= threshold)).collect();
    let a_max = g.edges().iter().map(|e| e.w).filter(|&w| w <= threshold).max().unwrap_or(1).max(1);
    let plan = plan(lc, a_max, threshold, mode)?;
    let top = lc.top();

    let mut members: Vec<Vec<Member>> = vec![Vec::new(); n];
    let mut index: Vec<BTreeMap<(usize, usize), usize>> = vec![BTreeMap::new(); n];
    let mut base_cid = Vec::new();
    let mut cid = 0u64;
    for level in &lc.levels {
        base_cid.push(cid);
        cid += level.clusters.len() as u64;
    }
    for j in plan.lowest..=top {
        let q = period(lc, j, plan.lowest);
        for (ci, c) in lc.levels[j].clusters.iter().enumerate() {
            let kids = c.children();
            let d_c = c.depth() as u64;
            for (&v, slot) in &c.tree {
                index[v].insert((j, ci), members[v].len());
                members[v].push(Member {
                    cid: base_cid[j] + ci as u64,
                    lowest: j == plan.lowest,
                    period: q,
                    depth: slot.depth as u64,
                    parent: slot.parent,
                    kids: kids.get(&v).cloned().unwrap_or_default(),
                    terminal: slot.terminal,
                    up_link: None,
                    init_t: (d_c + 1).div_ceil(q) * q,
                    has_source: slot.terminal && sources[v].is_some(),
                    relevant: false,
                    active: false,
                    know: false,
                    kid_any: Vec::new(),
                    kid_know: Vec::new(),
                    kid_all: Vec::new(),
                    decision: None,
                    leave_after: None,
                });
            }
        }
    }
    for j in plan.lowest..top {
        for (ci, c) in lc.levels[j].clusters.iter().enumerate() {
            let pi = lc.parents[j]
                .get(ci)
                .copied()
                .flatten()
                .ok_or_else(|| Error::Construction(format!("cluster {ci} of level {j} has no parent")))?;
            for &v in c.tree.keys() {
                let up = index[v].get(&(j + 1, pi)).copied().ok_or_else(|| {
                    Error::Construction(format!("tree node {v} of level-{j} cluster {ci} is outside its parent"))
                })?;
                let mi = index[v][&(j, ci)];
                members[v][mi].up_link = Some(up);
            }
        }
    }

    let out = s.run(plan.width, |v| Node {
        ctx,
        plan,
        nbrs: g.neighbors(v).iter().map(|a| (a.to, a.w)).collect(),
        members: std::mem::take(&mut members[v]),
        init_done: false,
        source: sources[v],
        reach: None,
        reached_at: None,
        sends: BTreeMap::new(),
    })?;
    if out.logical_rounds < plan.end {
        s.elapse_width(plan.end - out.logical_rounds, plan.width);
    }
    let reach = out
        .programs
        .iter()
        .map(|p| p.reach.filter(|r| p.reached_at.is_some() || r.parent.is_none()).filter(|r| r.dist <= threshold))
        .collect();
    let violations = out
        .lost
        .iter()
        .filter(|l| l.tag == T_BFS && out.programs[l.to].reached_at.is_none_or(|r| r >= l.round))
        .cloned()
        .collect();
    Ok(CoverBfs { reach, plan, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy_bfs::{full_bfs, thresholded_bfs, thresholded_bfs_in, BfsOptions};
    use crate::graph::{gen_graph, Family, Graph, GraphSpec, WeightMode};
    use crate::oracle::{bfs, dijkstra_offsets};
    use crate::sim::SimConfig;

    fn family(f: Family, n: usize) -> Graph {
        gen_graph(&GraphSpec::new(f, n, WeightMode::Unit, 1)).unwrap()
    }

    #[test]
    fn lowest_level_grows_with_edge_length() {
        assert_eq!(lowest_level(4, 3, 1), 0);
        assert_eq!(lowest_level(4, 3, 2), 0);
        assert_eq!(lowest_level(4, 3, 3), 1);
        assert_eq!(lowest_level(4, 3, 1000), 3);
    }

    #[test]
    fn path_thresholded_at_four() {
        let g = family(Family::Path, 10);
        let run = thresholded_bfs(&g, &[0], 4, &BfsOptions::default()).unwrap();
        let want: Vec<Option<u64>> = (0..10).map(|v| (v <= 4).then_some(v as u64)).collect();
        assert_eq!(run.dist, want);
    }

    #[test]
    fn path_with_small_base() {
        let g = family(Family::Path, 32);
        let run = full_bfs(&g, &[0], &BfsOptions { base: Some(4), ..Default::default() }).unwrap();
        assert_eq!(run.layered.base, 4);
        assert_eq!(run.dist, bfs(&g, &[0]));
    }

    #[test]
    fn grid_from_corner() {
        let g = family(Family::Grid, 49);
        let run = full_bfs(&g, &[48], &BfsOptions::default()).unwrap();
        assert_eq!(run.dist, bfs(&g, &[48]));
        assert_eq!(run.dist[0], Some(12));
    }

    #[test]
    fn every_node_a_source() {
        let g = family(Family::Cycle, 12);
        let all: Vec<usize> = (0..12).collect();
        let run = full_bfs(&g, &all, &BfsOptions::default()).unwrap();
        assert!(run.dist.iter().all(|&d| d == Some(0)));
    }

    #[test]
    fn single_node() {
        let g = Graph::new(1, Vec::new()).unwrap();
        assert_eq!(full_bfs(&g, &[0], &BfsOptions::default()).unwrap().dist, vec![Some(0)]);
    }

    #[test]
    fn offset_seeds_start_late() {
        let g = family(Family::Path, 20);
        let mut s = Session::new(&g, SimConfig::sleeping(&g));
        let mut seeds = vec![None; 20];
        seeds[0] = Some(Seed { label: 0, offset: 5, hops: 0 });
        seeds[19] = Some(Seed::new(0));
        let reach = thresholded_bfs_in(&mut s, &seeds, 12, &BfsOptions::default()).unwrap();
        let offsets: Vec<Option<u64>> = seeds.iter().map(|x| x.map(|sd| sd.offset)).collect();
        let want = dijkstra_offsets(&g, &[true; 20], &offsets);
        for v in 0..20 {
            assert_eq!(reach[v].map(|r| r.dist), want[v].filter(|&d| d <= 12), "node {v}");
        }
    }

    #[test]
    fn worst_mode_matches_scaled() {
        let g = family(Family::RandomTree, 40);
        let worst = full_bfs(&g, &[3], &BfsOptions { mode: Mode::Worst, ..Default::default() }).unwrap();
        let scaled = full_bfs(&g, &[3], &BfsOptions::default()).unwrap();
        assert_eq!(worst.dist, scaled.dist);
        assert!(worst.plan.sigma >= scaled.plan.sigma);
    }
}
