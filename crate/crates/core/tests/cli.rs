use std::fs;
use std::path::PathBuf;

use sleepy::cli::{main_with_args, sweep, ExperimentConfig, Overrides, EXIT_CONFIG, EXIT_TIMEOUT, EXIT_VERIFY};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("sleepy").chain(args.iter().copied()))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sleepy-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn p3_cssp_verifies() {
    let p3 = fixtures().join("p3.graph");
    assert_eq!(run(&["run", "--graph", p3.to_str().unwrap(), "--algo", "cssp-congest", "--verify"]), 0);
}

#[test]
fn run_writes_artifacts() {
    let out = scratch("artifacts");
    let code = run(&[
        "run", "--gen", "gnm", "--set", "n=10", "--set", "m=15", "--set", "W=9", "--algo", "apsp", "--verify", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let matrix = fs::read_to_string(out.join("matrix.csv")).unwrap();
    assert_eq!(matrix.lines().count(), 10);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["rounds"].as_u64().unwrap() > 0);
    assert!(out.join("schedule.json").exists());
}

#[test]
fn malformed_config_exits_2() {
    let dir = scratch("malformed");
    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "algo = \"cssp-congest\"\nn = = 4\n").unwrap();
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap()]), EXIT_CONFIG);
    fs::write(&cfg, "algo = \"cssp-congest\"\ngen = \"path\"\nn = 4\ncolour = 3\n").unwrap();
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(run(&["run", "--gen", "path", "--set", "n=4"]), EXIT_CONFIG);
    assert_eq!(run(&["run", "--bogus"]), EXIT_CONFIG);
}

#[test]
fn round_limit_exits_4() {
    assert_eq!(run(&["run", "--gen", "grid", "--set", "n=25", "--algo", "cssp-congest", "--round-limit", "1"]), EXIT_TIMEOUT);
}

#[test]
fn flags_override_the_file() {
    let dir = scratch("override");
    let cfg = dir.join("c.toml");
    fs::write(&cfg, "algo = \"cssp-congest\"\ngen = \"path\"\nn = 4\nseed = 1\nD = 8\n").unwrap();
    let o = Overrides { config: Some(cfg), seed: Some(9), set: vec!["D=16".into()], ..Default::default() };
    let c = ExperimentConfig::load(&o).unwrap();
    assert_eq!((c.seed, c.threshold, c.n), (Some(9), Some(16), Some(4)));
}

#[test]
fn sweep_rows_and_empty_axis() {
    let o = Overrides { gen: Some("gnm".into()), algo: Some("cssp-congest".into()), set: vec!["m=40".into()], ..Default::default() };
    let base = ExperimentConfig::read(&o).unwrap();
    let rows = sweep(&base, "n", &[16.0, 24.0, 32.0]).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![16, 24, 32]);
    assert_eq!(sweep(&base, "n", &[16.0, 24.0, 32.0]).unwrap(), rows);
    assert!(sweep(&base, "n", &[]).is_err());
    assert!(sweep(&base, "width", &[3.0]).is_err());
}

#[test]
fn sweep_over_path_length() {
    let o = Overrides { gen: Some("path".into()), algo: Some("bfs-energy".into()), set: vec!["n=2".into()], ..Default::default() };
    let base = ExperimentConfig::read(&o).unwrap();
    let rows = sweep(&base, "D", &[16.0, 32.0]).unwrap();
    assert_eq!((rows[0].n, rows[1].n), (17, 33));
    assert!(rows[1].rounds > rows[0].rounds);
}

#[test]
fn verify_flags_a_corrupted_cover_cache() {
    let dir = scratch("corrupt");
    for f in ["p3.graph", "tree40.graph", "tree40.cover.json"] {
        fs::copy(fixtures().join(f), dir.join(f)).unwrap();
    }
    let clean = sleepy::cli::verify(&dir, &[3], |_| {}).unwrap();
    assert!(clean.iter().all(|c| c.pass));

    let cache = dir.join("tree40.cover.json");
    let text = fs::read_to_string(&cache).unwrap();
    let (magic, body) = text.split_once('\n').unwrap();
    let mut lc: serde_json::Value = serde_json::from_str(body).unwrap();
    let top = lc["levels"].as_array_mut().unwrap().last_mut().unwrap();
    top["clusters"][0]["members"].as_array_mut().unwrap().truncate(1);
    fs::write(&cache, format!("{magic}\n{lc}\n")).unwrap();
    let checks = sleepy::cli::verify(&dir, &[3], |_| {}).unwrap();
    let cover = checks.iter().find(|c| c.check.ends_with("cover")).unwrap();
    assert!(!cover.pass);
    assert!(checks.iter().filter(|c| !c.check.ends_with("cover")).all(|c| c.pass));
    assert_eq!(run(&["verify", dir.to_str().unwrap(), "--criteria", "3"]), EXIT_VERIFY);
}

#[test]
fn verify_without_fixtures_exits_2() {
    let dir = scratch("empty");
    assert_eq!(run(&["verify", dir.to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(run(&["verify", dir.join("missing").to_str().unwrap()]), EXIT_CONFIG);
}
