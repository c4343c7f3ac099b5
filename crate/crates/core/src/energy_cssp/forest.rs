//! Low-energy Boruvka.
//!
//! Every step is a one-round exchange across fragment links or a scheduled
//! convergecast/broadcast inside fragments, so a node is awake O(1) rounds
//! per step. Per phase: fragment ids are exchanged, each fragment finds its
//! minimum outgoing edge (MOE), and the fragments pointing at each other
//! form rooted fragment trees (of each mutual pair the smaller id is the
//! root). A Cole-Vishkin 3-coloring of the fragment trees and a maximal
//! matching along its color classes cut them into stars of depth at most
//! two, which merge by re-rooting the hooking fragments at their MOE
//! endpoints, one depth level after the other.

use std::collections::BTreeMap;

use crate::decomp::Mode;
use crate::error::{Error, Result};
use crate::forest::{ceil_log2, Forest};
use crate::graph::{NodeId, Weight};
use crate::pipeline::{self, Tree, Values};
use crate::sim::Session;

/// Lexicographic minimum, where an empty vector is the neutral element.
pub fn lex_min(acc: &mut Vec<u64>, x: &[u64]) {
    if !x.is_empty() && (acc.is_empty() || x < &acc[..]) {
        *acc = x.to_vec();
    }
}

/// Color bound after one Cole-Vishkin step on colors below `b`.
fn cv_bound(b: u64) -> u64 {
    2 * ceil_log2(b.max(2)) as u64
}

/// Cole-Vishkin step: twice the lowest bit index where `own` and `parent`
/// differ, plus `own`'s bit there.
fn cv_step(own: u64, parent: u64) -> u64 {
    let i = (own ^ parent).trailing_zeros() as u64;
    2 * i + ((own >> i) & 1)
}

struct Run<'a, 'g> {
    s: &'a mut Session<'g>,
    active: &'a [bool],
    ctx: u64,
    mode: Mode,
    p_max: u64,
    tree: Tree,
    frag: Vec<NodeId>,
}

/// A fragment's view of its MOE and its place in the fragment tree.
#[derive(Clone, Debug, Default)]
struct Link {
    /// MOE as (weight, smaller end, larger end, fragment on the other side).
    moe: Option<(Weight, NodeId, NodeId, NodeId)>,
    /// Whether this node is its fragment's MOE endpoint.
    endpoint: bool,
    /// The far end of the MOE, at the endpoint.
    far: Option<NodeId>,
    /// Child fragments' endpoints attached here: (node, fragment).
    incoming: Vec<(NodeId, NodeId)>,
    /// The fragment has a parent fragment.
    has_parent: bool,
}

impl Run<'_, '_> {
    fn n(&self) -> usize {
        self.active.len()
    }

    fn window(&self, t: &Tree) -> u64 {
        match self.mode {
            Mode::Worst => self.p_max.max(t.window()),
            Mode::Scaled => t.window(),
        }
    }

    fn exchange(&mut self, awake: &[bool], msgs: Vec<Vec<(NodeId, Vec<u64>)>>) -> Result<Vec<Vec<(NodeId, Vec<u64>)>>> {
        pipeline::exchange(self.s, awake, msgs, self.ctx)
    }

    /// Convergecast of `own` with `combine` restricted to fragments with
    /// `part[frag]`, then a broadcast of `root_map(root, aggregate)`.
    fn gather_spread(
        &mut self,
        part: &dyn Fn(NodeId) -> bool,
        own: Values,
        combine: &dyn Fn(&mut Vec<u64>, &[u64]),
        root_map: &dyn Fn(NodeId, &[u64]) -> Vec<u64>,
    ) -> Result<Values> {
        let n = self.n();
        let mut t = self.tree.clone();
        for v in 0..n {
            t.on[v] = self.active[v] && part(self.frag[v]);
        }
        let w = self.window(&t);
        let up = pipeline::convergecast(self.s, &t, w, own, combine, self.ctx)?;
        let seeds = (0..n).map(|v| (t.on[v] && t.parent[v].is_none()).then(|| root_map(v, &up.subtree[v]))).collect();
        pipeline::broadcast(self.s, &t, w, seeds, &|_, x| x.to_vec(), self.ctx)
    }

    /// Per fragment, the value carried by its endpoint (first word), after
    /// an exchange in which attachment points send `down(node)` to the
    /// endpoints of their child fragments.
    fn from_parent(&mut self, links: &[Link], part: &dyn Fn(NodeId) -> bool, down: &dyn Fn(NodeId) -> Option<u64>) -> Result<Vec<Option<u64>>> {
        let n = self.n();
        let awake: Vec<bool> = (0..n).map(|v| self.active[v] && (links[v].endpoint || !links[v].incoming.is_empty())).collect();
        let msgs = (0..n)
            .map(|v| match down(v) {
                Some(x) => links[v].incoming.iter().filter(|(_, f)| part(*f)).map(|&(u, _)| (u, vec![x])).collect(),
                None => Vec::new(),
            })
            .collect();
        let heard = self.exchange(&awake, msgs)?;
        let own = (0..n)
            .map(|v| {
                let far = links[v].far.filter(|_| links[v].endpoint && links[v].has_parent);
                heard[v].iter().find(|(f, _)| Some(*f) == far).map(|(_, x)| x.clone()).unwrap_or_default()
            })
            .collect();
        let vals = self.gather_spread(part, own, &lex_min, &|_, x| x.to_vec())?;
        Ok(vals.into_iter().map(|x| x.first().copied()).collect())
    }
}

/// Rooted spanning forest of the subgraph induced by `active`, every node
/// knowing its component size. `p[v]` bounds the size of `v`'s component.
pub fn spanning_forest_energy(s: &mut Session, active: &[bool], p: &[u64], mode: Mode, ctx: u64) -> Result<Forest> {
    let g = s.graph;
    let n = g.n();
    let p_max = (0..n).filter(|&v| active[v]).map(|v| p[v]).max().unwrap_or(1).max(1);
    let mut run = Run { s, active, ctx, mode, p_max, tree: Tree::singletons(active), frag: (0..n).collect() };
    let phases = ceil_log2(p_max);

    for _ in 0..phases {
        // fragment ids across every edge
        let msgs = (0..n)
            .map(|v| {
                if !active[v] {
                    return Vec::new();
                }
                g.neighbors(v).iter().filter(|a| active[a.to]).map(|a| (a.to, vec![run.frag[v] as u64])).collect()
            })
            .collect();
        let heard = run.exchange(active, msgs)?;

        // minimum outgoing edge
        let own = (0..n)
            .map(|v| {
                let f = run.frag[v];
                let mut best: Vec<u64> = Vec::new();
                for (u, x) in &heard[v] {
                    if x[0] as NodeId != f {
                        let w = g.edge_between(v, *u).map_or(0, |e| g.edges()[e].w);
                        lex_min(&mut best, &[w, v.min(*u) as u64, v.max(*u) as u64, x[0]]);
                    }
                }
                best
            })
            .collect();
        let moe = run.gather_spread(&|_| true, own, &lex_min, &|_, x| x.to_vec())?;
        let mut links: Vec<Link> = vec![Link::default(); n];
        for v in 0..n {
            if let [w, a, b, t] = moe[v][..] {
                let (a, b) = (a as NodeId, b as NodeId);
                let endpoint = (a == v && run.frag[b] != run.frag[v]) || (b == v && run.frag[a] != run.frag[v]);
                links[v].moe = Some((w, a, b, t as NodeId));
                links[v].endpoint = endpoint;
                links[v].far = endpoint.then_some(if a == v { b } else { a });
            }
        }
        if links.iter().all(|l| l.moe.is_none()) {
            break;
        }

        // connect across the MOEs; mutual pairs find each other
        let awake: Vec<bool> = (0..n).map(|v| active[v]).collect();
        let msgs = (0..n)
            .map(|v| match (links[v].endpoint, links[v].far) {
                (true, Some(u)) => vec![(u, vec![run.frag[v] as u64])],
                _ => Vec::new(),
            })
            .collect();
        let heard = run.exchange(&awake, msgs)?;
        let mut mutual_root = vec![false; n];
        for v in 0..n {
            for (u, x) in &heard[v] {
                let f = x[0] as NodeId;
                let mutual = links[v].endpoint && links[v].far == Some(*u);
                if mutual && run.frag[v] < f {
                    mutual_root[v] = true;
                }
                // a mutual partner with the smaller id is our parent, not a child
                if !(mutual && f < run.frag[v]) {
                    links[v].incoming.push((*u, f));
                }
            }
        }
        let own = (0..n).map(|v| if mutual_root[v] { vec![1] } else { vec![] }).collect();
        let roots = run.gather_spread(&|_| true, own, &pipeline::max_combine, &|_, x| x.to_vec())?;
        for v in 0..n {
            links[v].has_parent = links[v].moe.is_some() && roots[v].first() != Some(&1);
        }
        let is_root: Vec<bool> = (0..n).map(|v| roots[v].first() == Some(&1)).collect();
        let live: BTreeMap<NodeId, bool> =
            (0..n).filter(|&v| active[v]).map(|v| (run.frag[v], links[v].moe.is_some())).collect();
        let live_f = |f: NodeId| live.get(&f).copied().unwrap_or(false);

        // Cole-Vishkin down to six colors
        let mut color: Vec<u64> = run.frag.iter().map(|&f| f as u64).collect();
        let mut bound = n as u64;
        while bound > 6 {
            let c = color.clone();
            let pc = run.from_parent(&links, &live_f, &|v| Some(c[v]))?;
            for v in 0..n {
                let parent = if links[v].has_parent { pc[v].expect("parent color arrives") } else { c[v] ^ 1 };
                color[v] = cv_step(c[v], parent);
            }
            bound = cv_bound(bound);
        }
        // shift down to three
        for top in (3..6).rev() {
            let old = color.clone();
            let pc = run.from_parent(&links, &live_f, &|v| Some(old[v]))?;
            for v in 0..n {
                color[v] = match (links[v].has_parent, pc[v]) {
                    (true, Some(x)) => x,
                    _ => (0..3).find(|&x| x != old[v]).unwrap(),
                };
            }
            let c = color.clone();
            let pc = run.from_parent(&links, &live_f, &|v| Some(c[v]))?;
            for v in 0..n {
                if color[v] == top {
                    let parent = if links[v].has_parent { pc[v] } else { None };
                    color[v] = (0..3).find(|&x| Some(x) != parent && x != old[v]).unwrap();
                }
            }
        }

        // maximal matching along parent links, one color class at a time
        let mut matched = vec![false; n];
        let mut matched_child = vec![false; n];
        for c in 0..3 {
            let m = matched.clone();
            let status = run.from_parent(&links, &live_f, &|v| Some(m[v] as u64))?;
            let proposes: Vec<bool> =
                (0..n).map(|v| links[v].has_parent && color[v] == c && !matched[v] && status[v] == Some(0)).collect();
            let awake: Vec<bool> = (0..n).map(|v| links[v].endpoint || !links[v].incoming.is_empty()).collect();
            let msgs = (0..n)
                .map(|v| match (proposes[v] && links[v].endpoint, links[v].far) {
                    (true, Some(u)) => vec![(u, vec![run.frag[v] as u64])],
                    _ => Vec::new(),
                })
                .collect();
            let heard = run.exchange(&awake, msgs)?;
            let own = (0..n)
                .map(|v| {
                    let mut best = Vec::new();
                    for (u, x) in &heard[v] {
                        if links[v].incoming.iter().any(|&(w, _)| w == *u) {
                            lex_min(&mut best, x);
                        }
                    }
                    best
                })
                .collect();
            let m = matched.clone();
            let accepted = run.gather_spread(
                &live_f,
                own,
                &lex_min,
                &|root, x| if m[root] { vec![] } else { x.to_vec() },
            )?;
            for v in 0..n {
                if !accepted[v].is_empty() {
                    matched[v] = true;
                }
            }
            let acc = accepted.clone();
            let got = run.from_parent(&links, &live_f, &|v| acc[v].first().copied())?;
            for v in 0..n {
                if proposes[v] && got[v] == Some(run.frag[v] as u64) {
                    matched[v] = true;
                    matched_child[v] = true;
                }
            }
        }

        // hooking: matched children and unmatched non-roots onto their
        // parents, unmatched roots onto their mutual partner
        let hooks: Vec<bool> = (0..n)
            .map(|v| live_f(run.frag[v]) && (matched_child[v] || !matched[v]) && (links[v].has_parent || is_root[v]))
            .collect();
        let mut settled: Vec<bool> = (0..n).map(|v| active[v] && !hooks[v]).collect();
        for _level in 0..2 {
            let pending: Vec<bool> = (0..n).map(|v| hooks[v] && !settled[v]).collect();
            if !pending.iter().any(|x| *x) {
                break;
            }
            let awake: Vec<bool> = (0..n).map(|v| links[v].endpoint || !links[v].incoming.is_empty()).collect();
            let msgs = (0..n)
                .map(|v| match (pending[v] && links[v].endpoint, links[v].far) {
                    (true, Some(u)) => vec![(u, vec![1])],
                    _ => Vec::new(),
                })
                .collect();
            let asked = run.exchange(&awake, msgs)?;
            let msgs = (0..n)
                .map(|v| {
                    if !settled[v] {
                        return Vec::new();
                    }
                    asked[v].iter().map(|(u, _)| (*u, vec![run.tree.depth[v] as u64 + 1, run.frag[v] as u64])).collect()
                })
                .collect();
            let answers = run.exchange(&awake, msgs)?;
            let mut attach: Vec<Option<NodeId>> = vec![None; n];
            let own: Values = (0..n)
                .map(|v| {
                    let far = links[v].far.filter(|_| pending[v] && links[v].endpoint);
                    match answers[v].iter().find(|(f, _)| Some(*f) == far) {
                        Some((f, x)) => {
                            attach[v] = Some(*f);
                            vec![x[0] + run.tree.depth[v] as u64, x[1], v as u64]
                        }
                        None => Vec::new(),
                    }
                })
                .collect();
            let mut t = run.tree.clone();
            for v in 0..n {
                t.on[v] = pending[v];
            }
            let w = run.window(&t);
            let up = pipeline::convergecast(run.s, &t, w, own, &lex_min, ctx)?;
            let on_path: Vec<bool> = (0..n).map(|v| !up.subtree[v].is_empty()).collect();
            let depth = t.depth.clone();
            let seeds = (0..n)
                .map(|v| {
                    (t.on[v] && t.parent[v].is_none() && on_path[v])
                        .then(|| vec![up.subtree[v][0], up.subtree[v][1], up.subtree[v][0]])
                })
                .collect();
            let spread = pipeline::broadcast(
                run.s,
                &t,
                w,
                seeds,
                &|v, x| {
                    if x.is_empty() {
                        return vec![];
                    }
                    let nd = if on_path[v] { x[0] - depth[v] as u64 } else { x[2] + 1 };
                    vec![x[0], x[1], nd]
                },
                ctx,
            )?;
            // flip the path toward the attachment point
            let toward: Vec<Option<NodeId>> = (0..n)
                .map(|v| up.from_children[v].iter().find(|(_, x)| !x.is_empty()).map(|(c, _)| *c))
                .collect();
            let mut parent = run.tree.parent.clone();
            let mut computed = BTreeMap::new();
            for v in 0..n {
                if !pending[v] || spread[v].is_empty() {
                    continue;
                }
                if on_path[v] {
                    parent[v] = attach[v].or(toward[v]);
                }
                run.frag[v] = spread[v][1] as NodeId;
                computed.insert(v, spread[v][2]);
                settled[v] = true;
            }
            run.tree.parent = parent;
            run.tree.rebuild()?;
            if let Some((&v, &d)) = computed.iter().find(|(&v, &d)| run.tree.depth[v] as u64 != d) {
                return Err(Error::Protocol(format!("re-rooting gave node {v} depth {d}, tree says {}", run.tree.depth[v])));
            }
        }
        if let Some(v) = (0..n).find(|&v| hooks[v] && !settled[v]) {
            return Err(Error::Protocol(format!("fragment of node {v} found no settled target")));
        }
    }

    finish(run)
}

/// Re-roots every tree at its smallest id and tells all nodes the size.
fn finish(mut run: Run) -> Result<Forest> {
    let n = run.n();
    let active = run.active;
    let ctx = run.ctx;
    let t = run.tree.clone();
    let w = run.window(&t);
    let own = (0..n).map(|v| if active[v] { vec![v as u64, t.depth[v] as u64] } else { vec![] }).collect();
    let up = pipeline::convergecast(run.s, &t, w, own, &lex_min, ctx)?;
    let sub = up.subtree.clone();
    let seeds = (0..n)
        .map(|v| (t.on[v] && t.parent[v].is_none()).then(|| vec![sub[v][0], sub[v][1], sub[v][1]]))
        .collect();
    let depth = t.depth.clone();
    let spread = pipeline::broadcast(
        run.s,
        &t,
        w,
        seeds,
        &|v, x| {
            let nd = if sub[v].first() == x.first() { x[1] - depth[v] as u64 } else { x[2] + 1 };
            vec![x[0], x[1], nd]
        },
        ctx,
    )?;
    let mut parent = t.parent.clone();
    for v in 0..n {
        if !active[v] || sub[v].first() != spread[v].first() {
            continue;
        }
        parent[v] = up.from_children[v].iter().find(|(_, x)| x.first() == spread[v].first()).map(|(c, _)| *c);
    }
    run.tree.parent = parent;
    run.tree.rebuild()?;
    for v in (0..n).filter(|&v| active[v]) {
        if run.tree.depth[v] as u64 != spread[v][2] {
            return Err(Error::Protocol(format!("final re-rooting gave node {v} a wrong depth")));
        }
    }
    let t = run.tree.clone();
    let w = run.window(&t);
    let own = (0..n).map(|v| if active[v] { vec![1] } else { vec![] }).collect();
    let size = pipeline::allreduce(run.s, &t, w, own, &pipeline::sum_combine, ctx)?;
    let mut f = Forest::empty(n);
    for v in (0..n).filter(|&v| active[v]) {
        f.set(v, spread[v][0] as NodeId, t.parent[v], t.children[v].clone(), t.depth[v], size[v][0]);
    }
    Ok(f)
}
