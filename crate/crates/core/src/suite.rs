//! The acceptance suite: twelve criteria, each a pass/fail line with the
//! measured numbers behind it.
//!
//! Criteria that audit other runs (cutter contract, covers, recursion,
//! sleep-safety, bit budget, determinism) reuse the runs of the criteria
//! they audit, so asking for one runs its sources first.

use std::time::Instant;

use serde::Serialize;

use crate::apsp::{apsp_random_delay, ApspOptions};
use crate::cssp::{cssp, lift_zero_weights, CsspOptions, CsspRun};
use crate::decomp::{labelled_wave, Mode};
use crate::energy_bfs::{audit_layers, full_bfs, BfsOptions};
use crate::energy_cssp::{cssp_energy, EnergyOptions};
use crate::error::Error;
use crate::graph::{gen_graph, Family, Graph, GraphSpec, NodeId, WeightMode};
use crate::oracle::{bfs, check_cutter, dijkstra};
use crate::sim::{Model, RunReport, Session, SimConfig};

pub const NAMES: [&str; 12] = [
    "exactness, congest cssp",
    "exactness, energy cssp",
    "exactness, energy bfs",
    "cutter contract",
    "congestion trend",
    "energy trend",
    "cover and decomposition invariants",
    "recursion accounting",
    "sleep-safety",
    "apsp",
    "bit budget",
    "determinism",
];

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub secs: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<36} {}  {} ({:.1}s)",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.detail,
            self.secs
        )
    }
}

/// Counters shared by the auditing criteria.
#[derive(Clone, Debug, Default)]
struct Audit {
    cutters: u64,
    cutter_bad: u64,
    frames: u64,
    appearance_bad: u64,
    covers: u64,
    cover_bad: u64,
    audited_runs: u64,
    energy_runs: u64,
    wave_bad: u64,
    lost: u64,
    bit_bad: u64,
    messages: u64,
}

impl Audit {
    fn report(&mut self, r: &RunReport) {
        self.bit_bad += r.bit_violations;
        self.messages += r.messages;
    }

    fn error(&mut self, e: &Error) {
        match e {
            Error::BitBudget { .. } => self.bit_bad += 1,
            Error::Protocol(m) if m.starts_with("sleep-safety") => self.wave_bad += 1,
            Error::Construction(m) if m.starts_with("audit") => self.cover_bad += 1,
            _ => {}
        }
    }

    fn cssp_trace(&mut self, g: &Graph, run: &CsspRun) {
        let work = if g.has_zero_weight() { lift_zero_weights(g) } else { g.clone() };
        for c in &run.trace.cutters {
            self.cutters += 1;
            self.cutter_bad += check_cutter(&work, c).len() as u64;
        }
        self.frames += run.trace.frames_run;
        self.appearance_bad += run.trace.appearance_violations().len() as u64;
    }
}

#[derive(Clone, Debug)]
struct Exactness {
    total: usize,
    wrong: Vec<String>,
    secs: f64,
    reports: Vec<String>,
}

/// Runs and caches the criteria.
#[derive(Default)]
pub struct Suite {
    audit: Audit,
    c1: Option<Exactness>,
    c2: Option<Exactness>,
    c3: Option<Exactness>,
    c5: Option<Outcome>,
    c6: Option<Outcome>,
    c10: Option<(Exactness, f64)>,
}

/// Criterion 1 graphs: `n <= 128`, weights up to `n^3`, every fourth with
/// zero weights, sparse ones disconnected.
pub fn congest_cases() -> Vec<(Graph, Vec<NodeId>)> {
    (0..200u64)
        .map(|i| {
            let n = 2 + (i as usize * 37) % 127;
            let m = match i % 5 {
                0 => n / 2,
                1 => n,
                2 => 2 * n,
                _ => 3 * n / 2,
            };
            let cube = (n as u64).pow(3);
            let weights = match i % 4 {
                0 => WeightMode::ZeroHeavy { zero_fraction: 0.3, max: cube },
                1 => WeightMode::Unit,
                _ => WeightMode::Uniform { max: cube },
            };
            (random_graph(n, m, weights, i), sources(n, i))
        })
        .collect()
}

/// Criterion 2 graphs: `n <= 96`, weights up to `min(n^3, 1000)`, every third with zeros.
pub fn energy_cases() -> Vec<(Graph, Vec<NodeId>)> {
    (0..50u64)
        .map(|i| {
            let n = 2 + (i as usize * 29) % 95;
            let m = if i % 5 == 0 { n / 2 } else { n + n / 2 };
            let max = (n as u64).pow(3).min(1000);
            let weights = if i % 3 == 0 {
                WeightMode::ZeroHeavy { zero_fraction: 0.3, max }
            } else {
                WeightMode::Uniform { max }
            };
            (random_graph(n, m, weights, 1000 + i), sources(n, i))
        })
        .collect()
}

/// Criterion 3 graphs: every family at a few sizes up to 256, unit lengths.
pub fn bfs_cases() -> Vec<(String, Graph, Vec<NodeId>)> {
    let mut out = Vec::new();
    for n in [1usize, 9, 40, 100, 256] {
        for (name, fam) in [
            ("path", Family::Path),
            ("cycle", Family::Cycle),
            ("grid", Family::Grid),
            ("random-tree", Family::RandomTree),
            ("random-gnm", Family::RandomGnm { m: n + n / 4 }),
        ] {
            let fam = match fam {
                Family::RandomGnm { m } => Family::RandomGnm { m: m.min(n * (n - 1) / 2) },
                f => f,
            };
            let g = gen_graph(&GraphSpec::new(fam, n, WeightMode::Unit, n as u64)).expect("bfs case");
            let src = if n > 2 && name == "random-gnm" { vec![0, n / 2] } else { vec![0] };
            out.push((format!("{name}-{n}"), g, src));
        }
    }
    out
}

fn random_graph(n: usize, m: usize, weights: WeightMode, seed: u64) -> Graph {
    let m = m.min(n * (n - 1) / 2);
    gen_graph(&GraphSpec::new(Family::RandomGnm { m }, n, weights, seed)).expect("random graph")
}

fn sources(n: usize, i: u64) -> Vec<NodeId> {
    let k = 1 + (i as usize % 3);
    let mut s: Vec<NodeId> = (0..k).map(|j| (i as usize * 7 + j * 13) % n).collect();
    s.sort_unstable();
    s.dedup();
    s
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

impl Suite {
    pub fn new() -> Self {
        Suite::default()
    }

    fn c1(&mut self) -> Exactness {
        if let Some(x) = &self.c1 {
            return x.clone();
        }
        let x = congest_exactness(&mut self.audit);
        self.c1 = Some(x.clone());
        x
    }

    fn c2(&mut self) -> Exactness {
        if let Some(x) = &self.c2 {
            return x.clone();
        }
        let t = Instant::now();
        let mut wrong = Vec::new();
        let mut reports = Vec::new();
        let cases = energy_cases();
        for (i, (g, src)) in cases.iter().enumerate() {
            let mut opts = EnergyOptions::default();
            opts.cssp.record = true;
            opts.bfs.mode = Mode::Scaled;
            opts.bfs.audit = true;
            self.audit.energy_runs += 1;
            self.audit.audited_runs += 1;
            match cssp_energy(g, src, &opts) {
                Ok(run) => {
                    self.audit.report(&run.report);
                    self.audit.lost += run.report.lost;
                    self.audit.cssp_trace(g, &run);
                    if run.dist != dijkstra(g, src) {
                        wrong.push(format!("graph {i}"));
                    }
                    reports.push(run.report.to_json_string());
                }
                Err(e) => {
                    self.audit.error(&e);
                    wrong.push(format!("graph {i}: {e}"));
                }
            }
        }
        let x = Exactness { total: cases.len(), wrong, secs: secs(t), reports };
        self.c2 = Some(x.clone());
        x
    }

    fn c3(&mut self) -> Exactness {
        if let Some(x) = &self.c3 {
            return x.clone();
        }
        let x = bfs_exactness(&mut self.audit, true);
        self.c3 = Some(x.clone());
        x
    }

    fn c10(&mut self) -> (Exactness, f64) {
        if let Some(x) = &self.c10 {
            return x.clone();
        }
        let x = apsp_exactness(&mut self.audit);
        self.c10 = Some(x.clone());
        x
    }

    pub fn run(&mut self, id: usize) -> Outcome {
        let t = Instant::now();
        let (pass, detail) = match id {
            1 => {
                let x = self.c1();
                exact_outcome(&x, 120.0)
            }
            2 => {
                let x = self.c2();
                exact_outcome(&x, 600.0)
            }
            3 => {
                let x = self.c3();
                exact_outcome(&x, 300.0)
            }
            4 => {
                self.c1();
                self.c2();
                let a = &self.audit;
                (a.cutters > 0 && a.cutter_bad == 0, format!("{} violations over {} cutter calls", a.cutter_bad, a.cutters))
            }
            5 => {
                let o = self.c5.get_or_insert_with(congestion_trend).clone();
                (o.pass, o.detail)
            }
            6 => {
                if self.c6.is_none() {
                    self.c6 = Some(energy_trend(&mut self.audit));
                }
                let o = self.c6.clone().unwrap();
                (o.pass, o.detail)
            }
            7 => {
                self.c2();
                self.c3();
                if self.c6.is_none() {
                    self.c6 = Some(energy_trend(&mut self.audit));
                }
                let a = &self.audit;
                (
                    a.cover_bad == 0 && a.covers > 0,
                    format!(
                        "{} violations over {} layered covers and {} audited cssp runs",
                        a.cover_bad, a.covers, a.audited_runs
                    ),
                )
            }
            8 => {
                self.c1();
                self.c2();
                let a = &self.audit;
                (a.appearance_bad == 0, format!("{} violations over {} frames", a.appearance_bad, a.frames))
            }
            9 => {
                self.c2();
                self.c3();
                if self.c6.is_none() {
                    self.c6 = Some(energy_trend(&mut self.audit));
                }
                let a = &self.audit;
                (
                    a.wave_bad == 0,
                    format!(
                        "{} wave arrivals at sleeping unreached nodes over {} energy runs ({} other lost messages)",
                        a.wave_bad, a.energy_runs, a.lost
                    ),
                )
            }
            10 => {
                let (x, c) = self.c10();
                let (ok, d) = exact_outcome(&x, 300.0);
                (ok && c <= APSP_C, format!("{d}, fitted c {c:.3} (bound {APSP_C})"))
            }
            11 => {
                self.c1();
                self.c2();
                self.c3();
                self.c10();
                if self.c5.is_none() {
                    self.c5 = Some(congestion_trend());
                }
                if self.c6.is_none() {
                    self.c6 = Some(energy_trend(&mut self.audit));
                }
                let a = &self.audit;
                (a.bit_bad == 0, format!("{} violations over {} messages", a.bit_bad, a.messages))
            }
            12 => {
                let (a1, a3, a10) = (self.c1(), self.c3(), self.c10().0);
                let mut scratch = Audit::default();
                let b1 = congest_exactness(&mut scratch);
                let b3 = bfs_exactness(&mut scratch, false);
                let b10 = apsp_exactness(&mut scratch).0;
                let same = |a: &Exactness, b: &Exactness| a.reports == b.reports;
                let diff: Vec<&str> = [("1", same(&a1, &b1)), ("3", same(&a3, &b3)), ("10", same(&a10, &b10))]
                    .into_iter()
                    .filter(|(_, s)| !s)
                    .map(|(n, _)| n)
                    .collect();
                let count = a1.reports.len() + a3.reports.len() + a10.reports.len();
                if diff.is_empty() {
                    (count > 0, format!("{count} reports identical on rerun"))
                } else {
                    (false, format!("reports differ on rerun of criteria {}", diff.join(", ")))
                }
            }
            _ => (false, format!("no criterion {id}")),
        };
        Outcome { id, name: NAMES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown"), pass, detail, secs: secs(t) }
    }

    pub fn run_all(&mut self) -> Vec<Outcome> {
        (1..=12).map(|i| self.run(i)).collect()
    }
}

/// Bound on the fitted APSP makespan constant.
pub const APSP_C: f64 = 2.0;

fn exact_outcome(x: &Exactness, limit: f64) -> (bool, String) {
    let mut d = format!("{}/{} exact in {:.1}s (limit {limit:.0}s)", x.total - x.wrong.len(), x.total, x.secs);
    if let Some(w) = x.wrong.first() {
        d.push_str(&format!("; first failure: {w}"));
    }
    (x.wrong.is_empty() && x.secs < limit, d)
}

fn congest_exactness(audit: &mut Audit) -> Exactness {
    let t = Instant::now();
    let mut wrong = Vec::new();
    let mut reports = Vec::new();
    let cases = congest_cases();
    for (i, (g, src)) in cases.iter().enumerate() {
        let opts = CsspOptions { record: true, ..Default::default() };
        match cssp(g, src, &opts) {
            Ok(run) => {
                audit.report(&run.report);
                audit.cssp_trace(g, &run);
                if run.dist != dijkstra(g, src) {
                    wrong.push(format!("graph {i}"));
                }
                reports.push(run.report.to_json_string());
            }
            Err(e) => {
                audit.error(&e);
                wrong.push(format!("graph {i}: {e}"));
            }
        }
    }
    Exactness { total: cases.len(), wrong, secs: secs(t), reports }
}

fn bfs_exactness(audit: &mut Audit, check_covers: bool) -> Exactness {
    let t = Instant::now();
    let mut wrong = Vec::new();
    let mut reports = Vec::new();
    let cases = bfs_cases();
    for (name, g, src) in &cases {
        audit.energy_runs += 1;
        match full_bfs(g, src, &BfsOptions::default()) {
            Ok(run) => {
                audit.report(&run.report);
                audit.lost += run.report.lost;
                if check_covers {
                    audit.covers += 1;
                    audit.cover_bad += audit_layers(g, &run.layers()).len() as u64;
                }
                if run.dist != bfs(g, src) {
                    wrong.push(name.clone());
                }
                reports.push(run.report.to_json_string());
            }
            Err(e) => {
                audit.error(&e);
                wrong.push(format!("{name}: {e}"));
            }
        }
    }
    Exactness { total: cases.len(), wrong, secs: secs(t), reports }
}

fn apsp_exactness(audit: &mut Audit) -> (Exactness, f64) {
    let t = Instant::now();
    let mut wrong = Vec::new();
    let mut reports = Vec::new();
    let mut c: f64 = 0.0;
    for i in 0..20u64 {
        let n = 2 + (i as usize * 11) % 31;
        let g = random_graph(n, n + n / 2, WeightMode::Uniform { max: (n as u64).pow(2) }, 500 + i);
        match apsp_random_delay(&g, &ApspOptions { seed: i, ..Default::default() }) {
            Ok(run) => {
                audit.report(&run.report);
                c = c.max(run.stats.fitted_c);
                if (0..n).any(|s| run.dist[s] != dijkstra(&g, &[s])) {
                    wrong.push(format!("graph {i}"));
                }
                reports.push(run.report.to_json_string());
            }
            Err(e) => {
                audit.error(&e);
                wrong.push(format!("graph {i}: {e}"));
            }
        }
    }
    (Exactness { total: 20, wrong, secs: secs(t), reports }, c)
}

/// Max congestion over `ceil(log2 n)^2`, averaged over three seeds per size.
fn congestion_trend() -> Outcome {
    let t = Instant::now();
    let mut ratios = Vec::new();
    let mut failure = None;
    for n in [64usize, 128, 256, 512] {
        let mut sum = 0.0;
        for seed in 0..3u64 {
            let g = random_graph(n, 3 * n, WeightMode::Uniform { max: n as u64 }, seed);
            match cssp(&g, &[0], &CsspOptions::default()) {
                Ok(run) => {
                    let l = crate::decomp::log_n(n) as f64;
                    sum += run.report.max_congestion() as f64 / (l * l);
                }
                Err(e) => failure = Some(format!("n {n}: {e}")),
            }
        }
        ratios.push((n, sum / 3.0));
    }
    let hi = ratios.iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let lo = ratios.iter().map(|r| r.1).fold(f64::MAX, f64::min);
    let pts: Vec<String> = ratios.iter().map(|(n, r)| format!("{n}:{r:.2}")).collect();
    let elapsed = secs(t);
    let pass = failure.is_none() && hi <= 2.0 * lo && elapsed < 600.0;
    let mut detail = format!("congestion/log2(n)^2 {} (band {:.2}, limit 2)", pts.join(" "), hi / lo);
    if let Some(f) = failure {
        detail.push_str(&format!("; {f}"));
    }
    Outcome { id: 5, name: NAMES[4], pass, detail, secs: elapsed }
}

/// Paths of `D` edges from one end: cover BFS against an all-awake wave.
fn energy_trend(audit: &mut Audit) -> Outcome {
    let t = Instant::now();
    let mut rows = Vec::new();
    let mut failure = None;
    for d in [64usize, 128, 256, 512] {
        let g = gen_graph(&GraphSpec::new(Family::Path, d + 1, WeightMode::Unit, 0)).expect("path");
        audit.energy_runs += 1;
        let run = match full_bfs(&g, &[0], &BfsOptions { mode: Mode::Scaled, ..Default::default() }) {
            Ok(r) => r,
            Err(e) => {
                audit.error(&e);
                failure = Some(format!("D {d}: {e}"));
                break;
            }
        };
        audit.report(&run.report);
        audit.lost += run.report.lost;
        audit.covers += 1;
        audit.cover_bad += audit_layers(&g, &run.layers()).len() as u64;
        let mut s = Session::new(&g, SimConfig::congest(&g));
        let mut src = vec![None; g.n()];
        src[0] = Some(0);
        let base = labelled_wave(&mut s, &src, d as u64, None, 0).map(|_| s.finish());
        let base = match base {
            Ok(r) => r,
            Err(e) => {
                failure = Some(format!("baseline D {d}: {e}"));
                break;
            }
        };
        audit.report(&base);
        rows.push((d, run.report.max_energy(), run.report.rounds, base.max_energy()));
    }
    let mut pass = failure.is_none() && rows.len() == 4;
    let mut steps = Vec::new();
    for w in rows.windows(2) {
        let (e, r, b) = (ratio(w[1].1, w[0].1), ratio(w[1].2, w[0].2), ratio(w[1].3, w[0].3));
        pass &= e <= 1.5 && r >= 1.8 && b >= 1.8;
        steps.push(format!("{}->{}: energy x{e:.2} rounds x{r:.2} baseline x{b:.2}", w[0].0, w[1].0));
    }
    let elapsed = secs(t);
    pass &= elapsed < 900.0;
    let pts: Vec<String> = rows.iter().map(|(d, e, r, _)| format!("D{d} e{e} r{r}")).collect();
    let mut detail = format!("{}; {}", pts.join(" "), steps.join("; "));
    if let Some(f) = failure {
        detail.push_str(&format!("; {f}"));
    }
    Outcome { id: 6, name: NAMES[5], pass, detail, secs: elapsed }
}

fn ratio(a: u64, b: u64) -> f64 {
    a as f64 / b.max(1) as f64
}

/// Model of a session used by a criterion, for reports.
pub fn model_of(id: usize) -> Model {
    match id {
        2 | 3 | 6 | 9 => Model::Sleeping,
        _ => Model::Congest,
    }
}
