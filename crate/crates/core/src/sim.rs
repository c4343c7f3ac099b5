//! Round-synchronous execution engine for the CONGEST and sleeping models.
//!
//! Every round has a send phase followed by a receive phase. A node takes
//! part in a round only if it is awake for it: in [`Model::Congest`] every
//! node that has not finished is awake, in [`Model::Sleeping`] a node is
//! awake exactly in the rounds it scheduled for itself. Messages sent to a
//! node that is asleep in that round are lost.
//!
//! The engine is event driven: a node is only *invoked* when it has a timer
//! or (in the CONGEST model) incoming messages. Programs are deterministic
//! in `(state, round, inbox)`, so skipping idle invocations is unobservable.
//!
//! With a megaround width `k > 1` each logical round stands for `k`
//! physical rounds: a channel may carry up to `k` messages per logical
//! round, and every awake node is charged `k` rounds of energy.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Bits charged for the protocol tag of every message.
pub const TAG_BITS: u32 = 4;
/// Default multiplier `c_msg` of the per-message bit budget.
pub const DEFAULT_C_MSG: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Message {
    pub tag: u8,
    pub payload: Vec<u64>,
    /// Optional context (subproblem or instance id), charged like a payload word.
    pub ctx: Option<u64>,
}

impl Message {
    pub fn new(tag: u8, payload: Vec<u64>) -> Self {
        Message { tag, payload, ctx: None }
    }

    pub fn with_ctx(mut self, ctx: u64) -> Self {
        self.ctx = Some(ctx);
        self
    }
}

/// `ceil(log2(v + 2))`: bits charged for one integer.
pub fn word_bits(v: u64) -> u32 {
    let x = v as u128 + 2;
    128 - (x - 1).leading_zeros()
}

/// Exact bit charge of a message.
pub fn audit_message(msg: &Message) -> u32 {
    TAG_BITS + msg.payload.iter().map(|&v| word_bits(v)).sum::<u32>() + msg.ctx.map_or(0, word_bits)
}

/// `c_msg * ceil(log2(n * (maxW + 2)))`.
pub fn bit_budget(n: usize, max_w: u64, c_msg: u32) -> u32 {
    let x = (n.max(1) as u128) * (max_w as u128 + 2);
    let lg = 128 - (x - 1).leading_zeros();
    c_msg * lg
}

pub fn default_budget(g: &Graph) -> u32 {
    bit_budget(g.n(), g.max_weight(), DEFAULT_C_MSG)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wake {
    /// Be awake (and invoked) in this future round.
    At(u64),
    /// No timer; in the CONGEST model the node is still invoked when messages arrive.
    Idle,
    /// Finished; never invoked again.
    Done,
}

impl Wake {
    pub fn next(round: u64) -> Wake {
        Wake::At(round + 1)
    }
}

/// Messages queued by a node during its send phase.
#[derive(Default, Debug)]
pub struct Outbox {
    msgs: Vec<(NodeId, Message)>,
}

impl Outbox {
    pub fn send(&mut self, to: NodeId, msg: Message) {
        self.msgs.push((to, msg));
    }

    pub fn is_empty(&self) -> bool {
        self.msgs.is_empty()
    }
}

/// A per-node state machine.
pub trait Program {
    /// Short protocol name used in error reports.
    fn protocol(&self) -> &'static str;
    /// First round this node is awake in (round numbers start at 1).
    fn start(&mut self) -> Wake;
    fn send(&mut self, round: u64, out: &mut Outbox);
    /// Consumes the messages delivered this round and returns the next wake-up.
    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Congest,
    Sleeping,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub model: Model,
    /// Physical rounds per logical round.
    pub megaround: u64,
    /// Limit on physical rounds.
    pub round_limit: u64,
    pub bit_budget: u32,
    /// Keep going after a bit-budget violation instead of failing.
    pub relaxed_audit: bool,
    /// Record every send as `(logical round, from, to)`.
    pub record_trace: bool,
    /// Instance id carried by every message of a multiplexed run; charged
    /// like a context word on top of the message.
    pub instance: Option<u64>,
}

impl SimConfig {
    pub fn new(model: Model, bit_budget: u32) -> Self {
        SimConfig {
            model,
            megaround: 1,
            round_limit: u64::MAX / 4,
            bit_budget,
            relaxed_audit: false,
            record_trace: false,
            instance: None,
        }
    }

    pub fn congest(g: &Graph) -> Self {
        Self::new(Model::Congest, default_budget(g))
    }

    pub fn sleeping(g: &Graph) -> Self {
        Self::new(Model::Sleeping, default_budget(g))
    }

    pub fn with_megaround(mut self, k: u64) -> Self {
        self.megaround = k.max(1);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Done,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LostMessage {
    /// Logical round of the loss, relative to the run that lost it.
    pub round: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub tag: u8,
}

/// Exact resource accounting of one or more consecutive runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub rounds: u64,
    /// Awake rounds per node.
    pub energy: Vec<u64>,
    /// Per edge index: messages sent `u->v` and `v->u` (u < v).
    pub congestion: Vec<[u64; 2]>,
    /// Edge endpoints, parallel to `congestion`.
    pub endpoints: Vec<(NodeId, NodeId)>,
    pub messages: u64,
    pub delivered: u64,
    pub lost: u64,
    pub max_bits: u32,
    pub bit_violations: u64,
    pub status: Status,
}

impl RunReport {
    pub fn empty(g: &Graph) -> Self {
        RunReport {
            rounds: 0,
            energy: vec![0; g.n()],
            congestion: vec![[0, 0]; g.m()],
            endpoints: g.edges().iter().map(|e| (e.u, e.v)).collect(),
            messages: 0,
            delivered: 0,
            lost: 0,
            max_bits: 0,
            bit_violations: 0,
            status: Status::Done,
        }
    }

    /// Sequential composition: `other` ran right after `self`.
    pub fn append(&mut self, other: &RunReport) {
        self.rounds += other.rounds;
        for (a, b) in self.energy.iter_mut().zip(&other.energy) {
            *a += b;
        }
        for (a, b) in self.congestion.iter_mut().zip(&other.congestion) {
            a[0] += b[0];
            a[1] += b[1];
        }
        self.messages += other.messages;
        self.delivered += other.delivered;
        self.lost += other.lost;
        self.max_bits = self.max_bits.max(other.max_bits);
        self.bit_violations += other.bit_violations;
        if other.status == Status::Timeout {
            self.status = Status::Timeout;
        }
    }

    pub fn max_energy(&self) -> u64 {
        self.energy.iter().copied().max().unwrap_or(0)
    }

    pub fn max_congestion(&self) -> u64 {
        self.congestion.iter().flat_map(|c| c.iter().copied()).max().unwrap_or(0)
    }

    /// Serialises to the stable report schema.
    pub fn to_json(&self) -> serde_json::Value {
        let energy: serde_json::Map<String, serde_json::Value> =
            self.energy.iter().enumerate().map(|(v, e)| (v.to_string(), (*e).into())).collect();
        let congestion: serde_json::Map<String, serde_json::Value> = self
            .endpoints
            .iter()
            .zip(&self.congestion)
            .map(|((u, v), c)| (format!("{u}-{v}"), serde_json::json!([c[0], c[1]])))
            .collect();
        serde_json::json!({
            "rounds": self.rounds,
            "energy": energy,
            "congestion": congestion,
            "max_bits": self.max_bits,
            "status": self.status,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("report serialises")
    }
}

pub struct RunOutcome<P> {
    pub programs: Vec<P>,
    pub report: RunReport,
    /// Messages lost to sleeping recipients, in order of occurrence.
    pub lost: Vec<LostMessage>,
    /// `(logical round, from, to)` for every send, if requested.
    pub trace: Vec<(u64, NodeId, NodeId)>,
    /// Logical rounds executed.
    pub logical_rounds: u64,
}

/// Runs one program per node until every node is done or the round limit hits.
///
/// A timeout is not an error: the outcome carries `Status::Timeout`.
pub fn run_simulation<P: Program>(
    g: &Graph,
    config: &SimConfig,
    mut factory: impl FnMut(NodeId) -> P,
) -> Result<RunOutcome<P>> {
    let n = g.n();
    let width = config.megaround.max(1);
    let mut programs: Vec<P> = (0..n).map(&mut factory).collect();
    let mut report = RunReport::empty(g);
    let mut next_wake: Vec<Option<u64>> = vec![None; n];
    let mut done_at: Vec<Option<u64>> = vec![None; n];
    let mut timers: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
    let mut lost_log = Vec::new();
    let mut trace = Vec::new();

    for (v, p) in programs.iter_mut().enumerate() {
        match p.start() {
            Wake::At(r) => {
                let r = r.max(1);
                next_wake[v] = Some(r);
                timers.entry(r).or_default().push(v);
            }
            Wake::Idle => {}
            Wake::Done => done_at[v] = Some(0),
        }
    }

    let mut last_round = 0u64;
    let mut awake = Vec::new();
    let mut is_awake = vec![false; n];
    let mut outbox = Outbox::default();
    let mut inboxes: Vec<Vec<(NodeId, Message)>> = vec![Vec::new(); n];
    let mut channel: HashMap<(NodeId, NodeId), usize> = HashMap::new();

    while let Some((&round, _)) = timers.iter().next() {
        let nodes = timers.remove(&round).unwrap_or_default();
        if round.saturating_mul(width) > config.round_limit {
            report.status = Status::Timeout;
            last_round = config.round_limit / width;
            break;
        }
        last_round = round;
        awake.clear();
        for v in nodes {
            if next_wake[v] == Some(round) && !is_awake[v] {
                is_awake[v] = true;
                awake.push(v);
            }
        }
        awake.sort_unstable();

        // send phase
        channel.clear();
        let mut receivers: Vec<NodeId> = Vec::new();
        for &v in &awake {
            outbox.msgs.clear();
            programs[v].send(round, &mut outbox);
            for (to, msg) in outbox.msgs.drain(..) {
                let Some(edge) = g.edge_between(v, to) else {
                    return Err(Error::Protocol(format!(
                        "{}: node {v} sent to non-neighbour {to}",
                        programs[v].protocol()
                    )));
                };
                let bits = audit_message(&msg) + config.instance.map_or(0, word_bits);
                report.max_bits = report.max_bits.max(bits);
                if bits > config.bit_budget {
                    report.bit_violations += 1;
                    if !config.relaxed_audit {
                        return Err(Error::BitBudget {
                            protocol: programs[v].protocol().to_string(),
                            tag: msg.tag,
                            bits,
                            budget: config.bit_budget,
                        });
                    }
                }
                let c = channel.entry((v, to)).or_insert(0);
                *c += 1;
                if *c as u64 > width {
                    return Err(Error::ChannelOversubscribed { from: v, to, count: *c, width: width as usize });
                }
                let dir = usize::from(v > to);
                report.congestion[edge][dir] += 1;
                report.messages += 1;
                if config.record_trace {
                    trace.push((round, v, to));
                }
                let listening = match config.model {
                    Model::Congest => done_at[to].is_none(),
                    Model::Sleeping => is_awake[to],
                };
                if listening {
                    report.delivered += 1;
                    if inboxes[to].is_empty() && !is_awake[to] {
                        receivers.push(to);
                    }
                    inboxes[to].push((v, msg));
                } else {
                    report.lost += 1;
                    lost_log.push(LostMessage { round, from: v, to, tag: msg.tag });
                }
            }
        }

        // receive phase
        let mut invoked = awake.clone();
        invoked.extend(receivers);
        invoked.sort_unstable();
        for &v in &invoked {
            inboxes[v].sort_by_key(|(from, _)| *from);
            let inbox = std::mem::take(&mut inboxes[v]);
            let wake = programs[v].receive(round, &inbox);
            match wake {
                Wake::At(r) => {
                    if r <= round {
                        return Err(Error::Protocol(format!(
                            "{}: node {v} scheduled round {r} from round {round}",
                            programs[v].protocol()
                        )));
                    }
                    if next_wake[v] != Some(r) {
                        next_wake[v] = Some(r);
                        timers.entry(r).or_default().push(v);
                    }
                }
                Wake::Idle => next_wake[v] = None,
                Wake::Done => {
                    next_wake[v] = None;
                    done_at[v] = Some(round);
                }
            }
        }
        for &v in &awake {
            is_awake[v] = false;
            if config.model == Model::Sleeping {
                report.energy[v] += width;
            }
        }
    }

    if config.model == Model::Congest {
        for v in 0..n {
            report.energy[v] = done_at[v].unwrap_or(last_round) * width;
        }
    }
    report.rounds = last_round * width;
    Ok(RunOutcome { programs, report, lost: lost_log, trace, logical_rounds: last_round })
}

/// A sequence of engine runs sharing one resource account and round limit.
///
/// Multi-step algorithms run each step as its own simulation and compose
/// the reports sequentially.
pub struct Session<'g> {
    pub graph: &'g Graph,
    pub config: SimConfig,
    pub report: RunReport,
    pub runs: u64,
    /// Lost messages with rounds made absolute (logical rounds from session start).
    pub lost: Vec<LostMessage>,
    /// Sends of all runs in session logical rounds, if the config records them.
    pub trace: Vec<(u64, NodeId, NodeId)>,
    logical: u64,
}

impl<'g> Session<'g> {
    pub fn new(graph: &'g Graph, config: SimConfig) -> Self {
        Session { graph, report: RunReport::empty(graph), config, runs: 0, lost: Vec::new(), trace: Vec::new(), logical: 0 }
    }

    /// Runs one step with the given megaround width; a timeout is an error.
    pub fn run<P: Program>(&mut self, megaround: u64, factory: impl FnMut(NodeId) -> P) -> Result<RunOutcome<P>> {
        let mut cfg = self.config.clone();
        cfg.megaround = megaround.max(1);
        cfg.round_limit = self.config.round_limit.saturating_sub(self.report.rounds);
        let out = run_simulation(self.graph, &cfg, factory)?;
        self.report.append(&out.report);
        self.runs += 1;
        for l in &out.lost {
            self.lost.push(LostMessage { round: l.round + self.logical, ..*l });
        }
        let base = self.logical;
        self.trace.extend(out.trace.iter().map(|&(r, a, b)| (r + base, a, b)));
        self.logical += out.logical_rounds;
        if out.report.status == Status::Timeout {
            return Err(Error::Timeout { limit: self.config.round_limit });
        }
        Ok(out)
    }

    /// Runs one step padded to exactly `window` logical rounds.
    pub fn run_window<P: Program>(
        &mut self,
        window: u64,
        megaround: u64,
        factory: impl FnMut(NodeId) -> P,
    ) -> Result<RunOutcome<P>> {
        let out = self.run(megaround, factory)?;
        if out.logical_rounds > window {
            return Err(Error::Protocol(format!("step overran its window: {} > {window}", out.logical_rounds)));
        }
        self.elapse_width(window - out.logical_rounds, megaround);
        Ok(out)
    }

    /// Advances the clock by `rounds` idle rounds.
    pub fn elapse(&mut self, rounds: u64) {
        self.elapse_width(rounds, 1);
    }

    /// Advances the clock by `rounds` idle logical rounds of width `width`.
    pub fn elapse_width(&mut self, rounds: u64, width: u64) {
        self.report.rounds += rounds * width.max(1);
        self.logical += rounds;
    }

    /// Appends a sub-computation during which every node was awake
    /// throughout: each node is charged its full length.
    pub fn absorb_awake(&mut self, sub: &RunReport) {
        let mut r = sub.clone();
        for e in r.energy.iter_mut() {
            *e = sub.rounds;
        }
        self.report.append(&r);
        self.logical += sub.rounds;
    }

    /// Appends a sub-computation as is.
    pub fn absorb(&mut self, sub: &RunReport) {
        self.report.append(sub);
        self.logical += sub.rounds;
    }

    /// Appends a sub-computation run on a graph whose node `i` is
    /// `nodes[i]` here and whose edge `e` is `edges[e]` here.
    pub fn absorb_mapped(&mut self, sub: &RunReport, nodes: &[NodeId], edges: &[usize]) {
        let mut r = RunReport { rounds: sub.rounds, ..RunReport::empty(self.graph) };
        for (i, &e) in sub.energy.iter().enumerate() {
            r.energy[nodes[i]] = e;
        }
        for (i, c) in sub.congestion.iter().enumerate() {
            let (u, v) = sub.endpoints[i];
            let e = edges[i];
            // orientation follows the smaller endpoint on both sides
            let flip = (nodes[u] < nodes[v]) != (u < v);
            r.congestion[e] = if flip { [c[1], c[0]] } else { *c };
        }
        r.messages = sub.messages;
        r.delivered = sub.delivered;
        r.lost = sub.lost;
        r.max_bits = sub.max_bits;
        r.bit_violations = sub.bit_violations;
        r.status = sub.status;
        self.absorb(&r);
    }

    /// Logical rounds elapsed since the session started.
    pub fn clock(&self) -> u64 {
        self.logical
    }

    pub fn finish(self) -> RunReport {
        self.report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Graph};

    struct Flood {
        id: NodeId,
        nbrs: Vec<NodeId>,
        sent: bool,
        heard: Vec<NodeId>,
    }

    impl Program for Flood {
        fn protocol(&self) -> &'static str {
            "flood"
        }
        fn start(&mut self) -> Wake {
            Wake::At(1)
        }
        fn send(&mut self, _round: u64, out: &mut Outbox) {
            if !self.sent {
                for &u in &self.nbrs {
                    out.send(u, Message::new(1, vec![self.id as u64]));
                }
                self.sent = true;
            }
        }
        fn receive(&mut self, _round: u64, inbox: &[(NodeId, Message)]) -> Wake {
            self.heard.extend(inbox.iter().map(|(f, _)| *f));
            Wake::Done
        }
    }

    fn p2() -> Graph {
        Graph::new(2, vec![Edge { u: 0, v: 1, w: 1 }]).unwrap()
    }

    #[test]
    fn single_node_terminates_quietly() {
        let g = Graph::new(1, vec![]).unwrap();
        struct Quit;
        impl Program for Quit {
            fn protocol(&self) -> &'static str {
                "quit"
            }
            fn start(&mut self) -> Wake {
                Wake::Done
            }
            fn send(&mut self, _: u64, _: &mut Outbox) {}
            fn receive(&mut self, _: u64, _: &[(NodeId, Message)]) -> Wake {
                Wake::Done
            }
        }
        for model in [Model::Congest, Model::Sleeping] {
            let out = run_simulation(&g, &SimConfig::new(model, 64), |_| Quit).unwrap();
            assert!(out.report.rounds <= 1);
            assert!(out.report.max_energy() <= 1);
            assert_eq!(out.report.messages, 0);
            assert_eq!(out.report.status, Status::Done);
        }
    }

    #[test]
    fn two_node_flood_uses_each_direction_once() {
        let g = p2();
        let out = run_simulation(&g, &SimConfig::congest(&g), |v| Flood {
            id: v,
            nbrs: g.neighbors(v).iter().map(|a| a.to).collect(),
            sent: false,
            heard: vec![],
        })
        .unwrap();
        assert_eq!(out.report.congestion, vec![[1, 1]]);
        assert_eq!(out.programs[0].heard, vec![1]);
        assert_eq!(out.report.delivered + out.report.lost, out.report.messages);
    }

    struct Sender {
        wake: u64,
        target: Option<NodeId>,
        heard: usize,
    }

    impl Program for Sender {
        fn protocol(&self) -> &'static str {
            "sender"
        }
        fn start(&mut self) -> Wake {
            Wake::At(self.wake)
        }
        fn send(&mut self, _: u64, out: &mut Outbox) {
            if let Some(t) = self.target {
                out.send(t, Message::new(2, vec![7]));
            }
        }
        fn receive(&mut self, _: u64, inbox: &[(NodeId, Message)]) -> Wake {
            self.heard += inbox.len();
            Wake::Done
        }
    }

    #[test]
    fn sleeping_recipient_loses_message() {
        let g = p2();
        let out = run_simulation(&g, &SimConfig::sleeping(&g), |v| {
            if v == 0 {
                Sender { wake: 1, target: Some(1), heard: 0 }
            } else {
                Sender { wake: 2, target: None, heard: 0 }
            }
        })
        .unwrap();
        assert_eq!(out.programs[1].heard, 0);
        assert_eq!(out.report.lost, 1);
        assert_eq!(out.lost, vec![LostMessage { round: 1, from: 0, to: 1, tag: 2 }]);
        assert_eq!(out.report.energy, vec![1, 1]);
    }

    #[test]
    fn megaround_charges_full_width() {
        let g = p2();
        let cfg = SimConfig::sleeping(&g).with_megaround(3);
        let out = run_simulation(&g, &cfg, |v| Sender { wake: 1, target: Some(1 - v), heard: 0 }).unwrap();
        assert_eq!(out.report.energy, vec![3, 3]);
        assert_eq!(out.report.rounds, 3);
        assert_eq!(out.programs[0].heard, 1);
    }

    struct Burst(usize);
    impl Program for Burst {
        fn protocol(&self) -> &'static str {
            "burst"
        }
        fn start(&mut self) -> Wake {
            Wake::At(1)
        }
        fn send(&mut self, _: u64, out: &mut Outbox) {
            for _ in 0..self.0 {
                out.send(1, Message::new(0, vec![]));
            }
            self.0 = 0;
        }
        fn receive(&mut self, _: u64, _: &[(NodeId, Message)]) -> Wake {
            Wake::Done
        }
    }

    #[test]
    fn oversubscription_rejected_without_megaround() {
        let g = p2();
        let err = run_simulation(&g, &SimConfig::congest(&g), |v| Burst(if v == 0 { 2 } else { 0 }));
        assert!(matches!(err, Err(Error::ChannelOversubscribed { count: 2, width: 1, .. })));
        let ok = run_simulation(&g, &SimConfig::congest(&g).with_megaround(2), |v| Burst(if v == 0 { 2 } else { 0 }));
        assert!(ok.is_ok());
    }

    #[test]
    fn bit_budget_violation_names_protocol() {
        let g = p2();
        let mut cfg = SimConfig::congest(&g);
        cfg.bit_budget = 5;
        let err = run_simulation(&g, &cfg, |v| Sender { wake: 1, target: Some(1 - v), heard: 0 });
        match err {
            Err(Error::BitBudget { protocol, tag: 2, .. }) => assert_eq!(protocol, "sender"),
            other => panic!("{:?}", other.err()),
        }
    }

    #[test]
    fn timeout_yields_partial_report() {
        let g = p2();
        let mut cfg = SimConfig::sleeping(&g);
        cfg.round_limit = 3;
        let out = run_simulation(&g, &cfg, |_| Sender { wake: 10, target: None, heard: 0 }).unwrap();
        assert_eq!(out.report.status, Status::Timeout);
    }

    #[test]
    fn audit_examples() {
        assert_eq!(audit_message(&Message::new(3, vec![])), TAG_BITS);
        assert_eq!(audit_message(&Message::new(3, vec![0])), TAG_BITS + 1);
        // n * maxW fits the default budget
        let (n, w) = (128usize, 128u64.pow(3));
        let m = Message::new(1, vec![n as u64 * w]);
        assert!(audit_message(&m) <= bit_budget(n, w, DEFAULT_C_MSG));
        assert_eq!(word_bits(1), 2);
        assert_eq!(word_bits(2), 2);
        assert_eq!(word_bits(3), 3);
    }

    #[test]
    fn report_json_schema() {
        let g = p2();
        let r = RunReport::empty(&g);
        let j = r.to_json();
        for k in ["rounds", "energy", "congestion", "max_bits", "status"] {
            assert!(j.get(k).is_some(), "{k}");
        }
        assert_eq!(j["congestion"]["0-1"], serde_json::json!([0, 0]));
        assert_eq!(j["status"], "done");
    }
}
