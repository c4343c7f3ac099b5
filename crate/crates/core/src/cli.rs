//! The `sleepy` command line: `run`, `sweep` and `verify`.
//!
//! A run is described by an [`ExperimentConfig`], read from a TOML file of
//! flat `key = value` pairs and overridden by flags (`--set key=value` for
//! keys without a flag of their own).
//!
//! Exit codes: 0 success, 1 other failures, 2 configuration or input errors,
//! 3 verification failures, 4 round limit reached.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::apsp::{apsp_random_delay, ApspOptions};
use crate::cover::LayeredCover;
use crate::cssp::{cssp, thresholded_cssp, CsspOptions, SubproblemCtx};
use crate::decomp::{build_cover_sync, build_decomposition, color_bound, diameter_bound, Mode};
use crate::energy_bfs::{audit_layers, full_bfs, thresholded_bfs, BfsOptions, Layers};
use crate::energy_cssp::{cssp_energy, thresholded_cssp_energy, EnergyOptions};
use crate::error::{Error, Result};
use crate::graph::{gen_graph, load_graph, save_graph, Family, Graph, GraphSpec, NodeId, WeightMode};
use crate::oracle::{
    bfs, check_cover, check_decomposition, check_layered, dijkstra, reference_thresholded, threshold, CheckViolation,
    CoverBounds, DistanceMap,
};
use crate::sim::{RunReport, Session, SimConfig};
use crate::suite::Suite;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_TIMEOUT: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "sleepy", version, about = "Distributed shortest paths and low-energy BFS on a round simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one algorithm on one graph.
    Run(RunArgs),
    /// Run a config across values of one axis and print CSV metrics.
    Sweep(SweepArgs),
    /// Check fixtures and run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Graph file: header `n m`, then `u v w` per line.
    #[arg(long, conflicts_with = "gen")]
    pub graph: Option<PathBuf>,
    /// Generated graph family: path, cycle, grid, gnm, tree, barbell.
    #[arg(long)]
    pub gen: Option<String>,
    #[arg(long)]
    pub algo: Option<String>,
    /// Compare against the sequential oracle and the structural checkers.
    #[arg(long)]
    pub verify: bool,
    /// worst or scaled.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub round_limit: Option<u64>,
    /// Print results as JSON.
    #[arg(long)]
    pub json: bool,
    /// Print distances as CSV.
    #[arg(long)]
    pub csv: bool,
    /// Any config key, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub o: Overrides,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub o: Overrides,
    /// n, D or density.
    #[arg(long)]
    pub axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Directory of `*.graph` fixtures, each optionally with a
    /// `*.cover.json` cover cache.
    pub fixtures: PathBuf,
    /// Criteria to run (default all).
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    BfsEnergy,
    CsspCongest,
    CsspEnergy,
    Apsp,
    Decomp,
    Cover,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::BfsEnergy => "bfs-energy",
            Algo::CsspCongest => "cssp-congest",
            Algo::CsspEnergy => "cssp-energy",
            Algo::Apsp => "apsp",
            Algo::Decomp => "decomp",
            Algo::Cover => "cover",
        }
    }
}

/// Everything a run needs. Unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: Option<PathBuf>,
    pub gen: Option<String>,
    pub n: Option<usize>,
    /// Edge count for `gnm`.
    pub m: Option<usize>,
    /// unit, uniform or zero-heavy.
    pub weights: Option<String>,
    /// Largest edge weight of generated graphs.
    #[serde(rename = "W")]
    pub max_w: Option<u64>,
    pub zero_fraction: Option<f64>,
    pub algo: Option<Algo>,
    pub sources: Option<Vec<NodeId>>,
    /// Distance threshold.
    #[serde(rename = "D")]
    pub threshold: Option<u64>,
    /// Decomposition separation.
    pub k: Option<u64>,
    /// Cover scale.
    pub d: Option<u64>,
    /// Cutter accuracy; only 0.5 is implemented.
    pub eps: Option<f64>,
    /// Cover base.
    #[serde(rename = "B")]
    pub base: Option<u64>,
    /// APSP delay range.
    pub delta: Option<u64>,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub round_limit: Option<u64>,
    /// Cover cache for bfs-energy.
    pub cover_cache: Option<PathBuf>,
    pub verify: Option<bool>,
    pub json: Option<bool>,
    pub csv: Option<bool>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// Reads the config file, applies the flags on top and validates.
    pub fn load(o: &Overrides) -> Result<Self> {
        let cfg = Self::read(o)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// [`ExperimentConfig::load`] without the completeness checks, for
    /// sweep templates.
    pub fn read(o: &Overrides) -> Result<Self> {
        let mut table = match &o.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| config_err(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        let mut put = |k: &str, v: toml::Value| {
            table.insert(k.to_string(), v);
        };
        if let Some(p) = &o.graph {
            put("graph", toml::Value::String(p.display().to_string()));
        }
        if let Some(f) = &o.gen {
            put("gen", toml::Value::String(f.clone()));
        }
        if let Some(a) = &o.algo {
            put("algo", toml::Value::String(a.clone()));
        }
        if let Some(m) = &o.mode {
            put("mode", toml::Value::String(m.clone()));
        }
        if let Some(s) = o.seed {
            put("seed", toml::Value::Integer(s as i64));
        }
        if let Some(p) = &o.out {
            put("out", toml::Value::String(p.display().to_string()));
        }
        if let Some(r) = o.round_limit {
            put("round_limit", toml::Value::Integer(r.min(i64::MAX as u64) as i64));
        }
        for (flag, key) in [(o.verify, "verify"), (o.json, "json"), (o.csv, "csv")] {
            if flag {
                put(key, toml::Value::Boolean(true));
            }
        }
        for kv in &o.set {
            let one: toml::Table = kv
                .replacen('=', " = ", 1)
                .parse()
                .or_else(|_| {
                    let (k, v) = kv.split_once('=').ok_or_else(|| config_err(format!("`{kv}` is not key=value")))?;
                    format!("{} = {:?}", k.trim(), v.trim()).parse::<toml::Table>().map_err(|e| config_err(e.to_string()))
                })?;
            table.extend(one);
        }
        if table.contains_key("graph") && table.contains_key("gen") {
            return Err(config_err("give either a graph file or a generator, not both"));
        }
        table.try_into().map_err(|e: toml::de::Error| config_err(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.algo.is_none() {
            return Err(config_err("no algorithm given"));
        }
        if self.graph.is_none() && self.gen.is_none() {
            return Err(config_err("no graph given"));
        }
        if self.gen.is_some() && self.n.is_none() {
            return Err(config_err("a generated graph needs n"));
        }
        if let Some(e) = self.eps {
            if e != 0.5 {
                return Err(config_err(format!("eps {e} is not supported; the cutter runs with eps = 0.5")));
            }
        }
        self.mode()?;
        self.weight_mode()?;
        Ok(())
    }

    pub fn mode(&self) -> Result<Mode> {
        match self.mode.as_deref() {
            None | Some("scaled") | Some("scaled-constants") => Ok(Mode::Scaled),
            Some("worst") | Some("worst-case") => Ok(Mode::Worst),
            Some(m) => Err(config_err(format!("unknown mode `{m}`"))),
        }
    }

    fn weight_mode(&self) -> Result<WeightMode> {
        let max = self.max_w.unwrap_or(1);
        match self.weights.as_deref() {
            None if self.max_w.is_some() => Ok(WeightMode::Uniform { max }),
            None | Some("unit") => Ok(WeightMode::Unit),
            Some("uniform") => Ok(WeightMode::Uniform { max }),
            Some("zero-heavy") => Ok(WeightMode::ZeroHeavy { zero_fraction: self.zero_fraction.unwrap_or(0.3), max }),
            Some(w) => Err(config_err(format!("unknown weights `{w}`"))),
        }
    }

    pub fn algo(&self) -> Algo {
        self.algo.expect("validated")
    }

    pub fn load_graph(&self) -> Result<Graph> {
        if let Some(p) = &self.graph {
            let text = fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            return load_graph(&text);
        }
        let family = Family::parse(self.gen.as_deref().expect("validated"), self.m)?;
        let spec = GraphSpec::new(family, self.n.expect("validated"), self.weight_mode()?, self.seed.unwrap_or(0));
        gen_graph(&spec)
    }

    fn sources(&self, n: usize) -> Vec<NodeId> {
        self.sources.clone().unwrap_or_else(|| if n > 0 { vec![0] } else { Vec::new() })
    }

    fn round_limit(&self) -> u64 {
        self.round_limit.unwrap_or(CsspOptions::default().round_limit)
    }

    fn cssp_options(&self) -> CsspOptions {
        CsspOptions { round_limit: self.round_limit(), ..Default::default() }
    }

    fn bfs_options(&self) -> Result<BfsOptions> {
        let cover = match &self.cover_cache {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
                Some(LayeredCover::from_cache(&text)?)
            }
            None => None,
        };
        Ok(BfsOptions { base: self.base, mode: self.mode()?, cover, round_limit: self.round_limit, audit: false })
    }
}

/// What a run produced.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutput {
    pub algo: Algo,
    pub n: usize,
    pub m: usize,
    /// One row per source for apsp, one row otherwise.
    pub dist: Vec<DistanceMap>,
    #[serde(serialize_with = "report_json")]
    pub report: RunReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifact: Option<serde_json::Value>,
    /// Oracle mismatches and checker violations, when verified.
    pub violations: Vec<String>,
    #[serde(skip)]
    pub cover: Option<LayeredCover>,
}

fn report_json<S: serde::Serializer>(r: &RunReport, s: S) -> std::result::Result<S::Ok, S::Error> {
    r.to_json().serialize(s)
}

fn mismatch(got: &DistanceMap, want: &DistanceMap, what: &str) -> Vec<String> {
    match got.iter().zip(want).position(|(a, b)| a != b) {
        Some(v) => vec![format!("{what}: node {v} has {:?}, oracle {:?}", got[v], want[v])],
        None if got.len() != want.len() => vec![format!("{what}: {} nodes, oracle {}", got.len(), want.len())],
        None => Vec::new(),
    }
}

fn describe(v: &[CheckViolation]) -> Vec<String> {
    v.iter().map(|x| format!("{}: {}", x.kind, x.detail)).collect()
}

/// Runs the configured algorithm; with `verify`, checks the result.
pub fn execute(cfg: &ExperimentConfig, g: &Graph) -> Result<RunOutput> {
    let src = cfg.sources(g.n());
    let verify = cfg.verify.unwrap_or(false);
    let mut violations = Vec::new();
    let mut artifact = None;
    let mut cover = None;
    let (dist, report) = match cfg.algo() {
        Algo::CsspCongest => {
            let run = match cfg.threshold {
                Some(d) => thresholded_cssp(g, &SubproblemCtx::top(g, &src, d), &cfg.cssp_options())?,
                None => cssp(g, &src, &cfg.cssp_options())?,
            };
            if verify {
                let want = cfg.threshold.map_or_else(|| dijkstra(g, &src), |d| reference_thresholded(g, &src, d));
                violations.extend(mismatch(&run.dist, &want, "distance"));
            }
            (vec![run.dist], run.report)
        }
        Algo::CsspEnergy => {
            let mut opts = EnergyOptions { cssp: cfg.cssp_options(), bfs: cfg.bfs_options()? };
            opts.bfs.audit = verify;
            let run = match cfg.threshold {
                Some(d) => thresholded_cssp_energy(g, &SubproblemCtx::top(g, &src, d), &opts)?,
                None => cssp_energy(g, &src, &opts)?,
            };
            if verify {
                let want = cfg.threshold.map_or_else(|| dijkstra(g, &src), |d| reference_thresholded(g, &src, d));
                violations.extend(mismatch(&run.dist, &want, "distance"));
            }
            (vec![run.dist], run.report)
        }
        Algo::BfsEnergy => {
            let h = g.unweighted();
            let opts = cfg.bfs_options()?;
            let run = match cfg.threshold {
                Some(d) => thresholded_bfs(&h, &src, d, &opts)?,
                None => full_bfs(&h, &src, &opts)?,
            };
            if verify {
                let want = bfs(&h, &src);
                let want = cfg.threshold.map_or(want.clone(), |d| threshold(&want, d));
                violations.extend(mismatch(&run.dist, &want, "distance"));
                if opts.cover.is_none() {
                    violations.extend(describe(&audit_layers(&h, &run.layers())));
                }
            }
            cover = Some(run.layered.clone());
            (vec![run.dist], run.report)
        }
        Algo::Apsp => {
            let opts = ApspOptions {
                delta: cfg.delta,
                seed: cfg.seed.unwrap_or(0),
                megaround_cap: None,
                cssp: cfg.cssp_options(),
            };
            let run = apsp_random_delay(g, &opts)?;
            if verify {
                for (s, row) in run.dist.iter().enumerate() {
                    violations.extend(mismatch(row, &dijkstra(g, &[s]), &format!("source {s}")));
                }
            }
            artifact = Some(serde_json::json!({ "instances": run.instances, "stats": run.stats }));
            (run.dist, run.report)
        }
        Algo::Decomp => {
            let k = cfg.k.unwrap_or(3);
            let mut c = SimConfig::congest(g);
            c.round_limit = cfg.round_limit();
            let mut s = Session::new(g, c);
            let (dec, stats) = build_decomposition(&mut s, k, 0, cfg.mode()?)?;
            if verify {
                let n = g.n();
                violations.extend(describe(&check_decomposition(g, &dec, diameter_bound(n, k), color_bound(n))));
                violations.extend(describe(&crate::oracle::check_phases(n, &stats)));
            }
            artifact = Some(serde_json::to_value(&dec)?);
            (Vec::new(), s.finish())
        }
        Algo::Cover => {
            let d = cfg.d.unwrap_or(1);
            let mut c = SimConfig::congest(g);
            c.round_limit = cfg.round_limit();
            let mut s = Session::new(g, c);
            let built = build_cover_sync(&mut s, d, 0, cfg.mode()?)?;
            if verify {
                let layers = Layers {
                    layered: LayeredCover { base: d.max(2), levels: vec![built.cover.clone()], parents: Vec::new() },
                    decompositions: vec![built.decomposition.clone()],
                    stats: vec![built.stats.clone()],
                };
                violations.extend(describe(&audit_layers(g, &layers)));
            }
            artifact = Some(serde_json::to_value(&built.cover)?);
            (Vec::new(), s.finish())
        }
    };
    Ok(RunOutput { algo: cfg.algo(), n: g.n(), m: g.m(), dist, report, artifact, violations, cover })
}

fn fmt_dist(x: &Option<u64>) -> String {
    x.map_or_else(|| "inf".to_string(), |d| d.to_string())
}

/// Distances as CSV: `node,dist` for one row, an `n x n` matrix otherwise.
pub fn dist_csv(dist: &[DistanceMap]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    if let [row] = dist {
        w.write_record(["node", "dist"]).map_err(csv_err)?;
        for (v, x) in row.iter().enumerate() {
            w.write_record([v.to_string(), fmt_dist(x)]).map_err(csv_err)?;
        }
    } else {
        for row in dist {
            w.write_record(row.iter().map(fmt_dist)).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn write_artifacts(dir: &Path, g: &Graph, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("input.graph"), save_graph(g))?;
    if !out.dist.is_empty() {
        let name = if out.algo == Algo::Apsp { "matrix.csv" } else { "dist.csv" };
        fs::write(dir.join(name), dist_csv(&out.dist)?)?;
    }
    fs::write(dir.join("report.json"), out.report.to_json_string())?;
    if let Some(a) = &out.artifact {
        let name = match out.algo {
            Algo::Decomp => "decomposition.json",
            Algo::Cover => "cover.json",
            _ => "schedule.json",
        };
        fs::write(dir.join(name), serde_json::to_string_pretty(a)?)?;
    }
    if let Some(lc) = &out.cover {
        fs::write(dir.join("cover.cache.json"), lc.to_cache()?)?;
    }
    Ok(())
}

/// Exit code of an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Timeout { .. } => EXIT_TIMEOUT,
        Error::Config(_) | Error::Parse { .. } | Error::Spec(_) | Error::InvalidGraph(_) => EXIT_CONFIG,
        _ => EXIT_OTHER,
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

/// `sleepy run`: writes the input graph, `dist.csv` or `matrix.csv` and
/// `report.json` (plus the decomposition, cover or schedule) to `out`, and
/// prints a summary.
pub fn cmd_run(o: &Overrides) -> i32 {
    let cfg = match ExperimentConfig::load(o) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    debug!("config {cfg:?}");
    let g = match cfg.load_graph() {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    info!("graph n={} m={} max weight {}", g.n(), g.m(), g.max_weight());
    let out = match execute(&cfg, &g) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    if let Some(dir) = &cfg.out {
        if let Err(e) = write_artifacts(dir, &g, &out) {
            return fail(&e);
        }
    }
    if cfg.json.unwrap_or(false) {
        println!("{}", serde_json::to_string(&out).expect("output serialises"));
    } else if cfg.csv.unwrap_or(false) {
        match dist_csv(&out.dist) {
            Ok(s) => print!("{s}"),
            Err(e) => return fail(&e),
        }
    } else {
        println!(
            "{} n={} m={} rounds={} max_energy={} max_congestion={} messages={}",
            out.algo.name(),
            out.n,
            out.m,
            out.report.rounds,
            out.report.max_energy(),
            out.report.max_congestion(),
            out.report.messages
        );
    }
    for v in &out.violations {
        eprintln!("verify: {v}");
    }
    if out.violations.is_empty() {
        0
    } else {
        EXIT_VERIFY
    }
}

/// One sweep point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub n: usize,
    pub m: usize,
    pub rounds: u64,
    pub max_energy: u64,
    pub max_congestion: u64,
}

/// The config of one sweep point. `n` sets the node count; `D` sets the
/// threshold, and for generated paths also `n = D + 1`; `density` sets the
/// average degree of a `gnm` graph.
pub fn sweep_point(base: &ExperimentConfig, axis: &str, value: f64) -> Result<ExperimentConfig> {
    let mut c = base.clone();
    let int = |x: f64| -> Result<u64> {
        if x < 0.0 || x.fract() != 0.0 {
            return Err(config_err(format!("axis value {x} is not a non-negative integer")));
        }
        Ok(x as u64)
    };
    match axis {
        "n" => c.n = Some(int(value)? as usize),
        "D" => {
            let d = int(value)?;
            if c.gen.as_deref() == Some("path") {
                c.n = Some(d as usize + 1);
            } else {
                c.threshold = Some(d);
            }
        }
        "density" => {
            if !matches!(c.gen.as_deref(), Some("gnm") | Some("random-gnm")) {
                return Err(config_err("the density axis needs the gnm generator"));
            }
            let n = c.n.ok_or_else(|| config_err("the density axis needs n"))?;
            c.m = Some(((value * n as f64) / 2.0).round() as usize);
        }
        other => return Err(config_err(format!("unknown axis `{other}`; use n, D or density"))),
    }
    Ok(c)
}

pub fn sweep(base: &ExperimentConfig, axis: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(config_err("empty sweep axis"));
    }
    let mut rows = Vec::new();
    for &x in values {
        let c = sweep_point(base, axis, x)?;
        c.validate()?;
        let g = c.load_graph()?;
        let out = execute(&c, &g)?;
        if let Some(v) = out.violations.first() {
            return Err(Error::Protocol(format!("verification failed at {axis}={x}: {v}")));
        }
        info!("{axis}={x}: rounds {}", out.report.rounds);
        rows.push(SweepRow {
            axis: axis.to_string(),
            value: x,
            n: out.n,
            m: out.m,
            rounds: out.report.rounds,
            max_energy: out.report.max_energy(),
            max_congestion: out.report.max_congestion(),
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("row serialises");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn cmd_sweep(a: &SweepArgs) -> i32 {
    let result = ExperimentConfig::read(&a.o).and_then(|c| sweep(&c, &a.axis, &a.values));
    match result {
        Ok(rows) if a.o.json => {
            println!("{}", serde_json::to_string(&rows).expect("rows serialise"));
            0
        }
        Ok(rows) => {
            print!("{}", sweep_csv(&rows));
            0
        }
        Err(Error::Protocol(m)) if m.starts_with("verification") => {
            eprintln!("error: {m}");
            EXIT_VERIFY
        }
        Err(e) => fail(&e),
    }
}

/// One line of a verify report.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

/// Checks of one graph fixture: CONGEST CSSP against Dijkstra, and if a
/// cover cache sits next to it, the cached cover's structure and a BFS run
/// on it.
pub fn check_fixture(graph: &Path) -> Result<Vec<Check>> {
    let name = graph.file_stem().unwrap_or_default().to_string_lossy().to_string();
    let g = load_graph(&fs::read_to_string(graph)?)?;
    let mut out = Vec::new();
    let src = vec![0];
    let cssp_check = match cssp(&g, &src, &CsspOptions::default()) {
        Ok(run) => {
            let bad = mismatch(&run.dist, &dijkstra(&g, &src), "distance");
            Check { check: format!("{name}: cssp"), pass: bad.is_empty(), detail: bad.join("; ") }
        }
        Err(e) => Check { check: format!("{name}: cssp"), pass: false, detail: e.to_string() },
    };
    out.push(cssp_check);
    let cache = graph.with_extension("cover.json");
    if cache.exists() {
        out.push(check_cover_cache(&name, &g, &cache));
    }
    Ok(out)
}

fn check_cover_cache(name: &str, g: &Graph, path: &Path) -> Check {
    let check = format!("{name}: cover");
    let lc = match fs::read_to_string(path).map_err(Error::from).and_then(|t| LayeredCover::from_cache(&t)) {
        Ok(lc) => lc,
        Err(e) => return Check { check, pass: false, detail: format!("unreadable cache: {e}") },
    };
    if lc.levels.iter().flat_map(|l| &l.clusters).any(|c| c.tree.keys().any(|&v| v >= g.n())) {
        return Check { check, pass: false, detail: "cache names nodes outside the graph".into() };
    }
    let n = g.n();
    let mut bad = check_layered(g, &lc);
    for level in &lc.levels {
        let d = level.scale.max(1);
        let bounds = CoverBounds {
            stretch: 2 * diameter_bound(n, 2 * d + 1) / d + 1,
            node_multiplicity: usize::MAX,
            edge_multiplicity: usize::MAX,
        };
        bad.extend(check_cover(g, level, bounds));
    }
    if !bad.is_empty() {
        let mut detail = describe(&bad[..bad.len().min(3)]).join("; ");
        if bad.len() > 3 {
            detail.push_str(&format!("; {} more", bad.len() - 3));
        }
        return Check { check, pass: false, detail };
    }
    let h = g.unweighted();
    let opts = BfsOptions { cover: Some(lc), ..Default::default() };
    match full_bfs(&h, &[0], &opts) {
        Ok(run) => {
            let bad = mismatch(&run.dist, &bfs(&h, &[0]), "bfs on cached cover");
            Check { check, pass: bad.is_empty(), detail: bad.join("; ") }
        }
        Err(e) => Check { check, pass: false, detail: e.to_string() },
    }
}

/// Fixture checks, then the acceptance criteria.
pub fn verify(dir: &Path, criteria: &[usize], mut progress: impl FnMut(&Check)) -> Result<Vec<Check>> {
    let mut graphs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| config_err(format!("fixtures {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "graph"))
        .collect();
    graphs.sort();
    if graphs.is_empty() {
        return Err(config_err(format!("no *.graph fixtures in {}", dir.display())));
    }
    let mut out = Vec::new();
    for p in &graphs {
        for c in check_fixture(p)? {
            progress(&c);
            out.push(c);
        }
    }
    let ids: Vec<usize> = if criteria.is_empty() { (1..=12).collect() } else { criteria.to_vec() };
    let mut suite = Suite::new();
    for id in ids {
        let o = suite.run(id);
        let c = Check { check: format!("criterion {id}: {}", o.name), pass: o.pass, detail: o.detail };
        progress(&c);
        out.push(c);
    }
    Ok(out)
}

pub fn cmd_verify(a: &VerifyArgs) -> i32 {
    let json = a.json;
    let result = verify(&a.fixtures, &a.criteria, |c| {
        if !json {
            println!("{} {}{}", if c.pass { "PASS" } else { "FAIL" }, c.check, if c.detail.is_empty() { String::new() } else { format!("  {}", c.detail) });
        }
    });
    match result {
        Ok(checks) => {
            if json {
                println!("{}", serde_json::to_string(&checks).expect("checks serialise"));
            }
            if checks.iter().all(|c| c.pass) {
                0
            } else {
                EXIT_VERIFY
            }
        }
        Err(e) => fail(&e),
    }
}

/// Parses `args` and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("SLEEPY_LOG")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match &cli.command {
        Command::Run(a) => cmd_run(&a.o),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    }
}
