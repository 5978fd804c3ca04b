use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
replications = 2
oracle_reps = 500

[heatmap]
n_grid = [4, 10, 50]
pf_grid = [0.1, 0.3]
reps = 200

[convergence]
horizon_slots = 300
log_every = 10

[regret]
t_train_grid = [10, 20, 40]
n_ch_grid = [10, 20]
horizon_slots = 100

[scalability]
n_clients_grid = [2, 4]
"#;

fn v2xsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_v2xsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("V2XSIM_CONFIG")
        .env_remove("V2XSIM_OUT")
        .env_remove("V2XSIM_SEED")
        .env_remove("V2XSIM_THREADS")
        .env_remove("V2XSIM_REPLICATIONS")
        .output()
        .expect("binary runs")
}

fn setup() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    (dir, cfg)
}

fn run_ok(dir: &Path, cmd: &str, cfg: &Path, out: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out];
    args.extend_from_slice(extra);
    let o = v2xsim(dir, &args);
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    dir.join(out)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn heatmap_shape_and_manifest() {
    let (dir, cfg) = setup();
    let out = run_ok(dir.path(), "heatmap", &cfg, "out", &["--seed", "7"]);
    let text = fs::read_to_string(out.join("heatmap.csv")).unwrap();
    assert!(text.starts_with("n_peers,p_f,mean_latency_s,reps\n"));
    assert_eq!(csv_rows(&out.join("heatmap.csv")).len(), 3 * 2);
    let m = manifest(&out);
    assert_eq!(m["status"], "complete");
    assert_eq!(m["master_seed"], 7);
    assert_eq!(m["config"]["heatmap"]["reps"], 200);
    assert_eq!(m["outputs"], serde_json::json!(["heatmap.csv"]));
    assert!(m["finished_at"].is_string());
    assert!(m["tool_version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
}

#[test]
fn missing_config_names_the_path() {
    let dir = TempDir::new().unwrap();
    let o = v2xsim(dir.path(), &["heatmap", "--config", "does/not/exist.toml", "--out", "out"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does/not/exist.toml"));
    assert!(o.stdout.is_empty());
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "n_channels = 0\n").unwrap();
    let o = v2xsim(dir.path(), &["heatmap", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    fs::write(&cfg, "unknown_key = 3\n").unwrap();
    let o = v2xsim(dir.path(), &["heatmap", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml"));
}

#[test]
fn bad_usage_exits_one_and_help_exits_zero() {
    let dir = TempDir::new().unwrap();
    assert_eq!(v2xsim(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(v2xsim(dir.path(), &["heatmap", "--seed", "minus-one"]).status.code(), Some(1));
    assert_eq!(v2xsim(dir.path(), &["heatmap", "--threads", "0"]).status.code(), Some(1));
    assert_eq!(v2xsim(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let (dir, cfg) = setup();
    fs::write(dir.path().join("occupied"), "a file, not a directory").unwrap();
    let o = v2xsim(dir.path(), &["heatmap", "--config", cfg.to_str().unwrap(), "--out", "occupied"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn gossip_defaults() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("g");
    let o = v2xsim(dir.path(), &["gossip", "--out", "g", "--replications", "500"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&out.join("gossip.csv"));
    let mut rounds = std::collections::BTreeMap::new();
    for r in &rows {
        rounds.insert(r[0].parse::<u32>().unwrap(), r[4].parse::<u32>().unwrap());
    }
    assert_eq!(rounds.keys().copied().collect::<Vec<_>>(), vec![5, 10, 50, 100]);
    for (&n, &r) in &rounds {
        let lo = if n == 5 { 4 } else { 6 };
        assert!((lo..=12).contains(&r), "n = {n}: {r} rounds");
    }
}

#[test]
fn gossip_flags_and_threshold_bounds() {
    let dir = TempDir::new().unwrap();
    let o = v2xsim(dir.path(), &["gossip", "--out", "g", "--n-list", "8,16", "--threshold", "0.1", "--replications", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("g/gossip.csv"));
    assert!(rows.iter().all(|r| r[0] == "8" || r[0] == "16"));
    for t in ["0", "1", "1.5", "-0.2"] {
        let o = v2xsim(dir.path(), &["gossip", "--out", "g2", "--threshold", t]);
        assert_eq!(o.status.code(), Some(1), "threshold {t}");
    }
}

#[test]
fn regret_aggregate_shape() {
    let (dir, cfg) = setup();
    let out = run_ok(dir.path(), "regret", &cfg, "out", &[]);
    // 3 training lengths x 2 policies x 2 channel counts.
    assert_eq!(csv_rows(&out.join("regret.csv")).len(), 3 * 2 * 2);
    assert_eq!(csv_rows(&out.join("replications.csv")).len(), 3 * 2 * 2 * 2);
}

#[test]
fn convergence_log_is_downsampled() {
    let (dir, cfg) = setup();
    let out = run_ok(dir.path(), "convergence", &cfg, "out", &[]);
    // Operating slots 100..300 every 10th, 2 replications, 2 policies.
    assert_eq!(csv_rows(&out.join("selections.csv")).len(), 20 * 2 * 2);
    // 30 checkpoints x 10 channels x 2 replications x 2 policies.
    assert_eq!(csv_rows(&out.join("selection_probabilities.csv")).len(), 30 * 10 * 2 * 2);
}

#[test]
fn scalability_covers_three_policies() {
    let (dir, cfg) = setup();
    let out = run_ok(dir.path(), "scalability", &cfg, "out", &[]);
    let rows = csv_rows(&out.join("scalability.csv"));
    assert_eq!(rows.len(), 2 * 3);
    let policies: std::collections::BTreeSet<_> = rows.iter().map(|r| r[1].clone()).collect();
    assert_eq!(policies.into_iter().collect::<Vec<_>>(), vec!["oracle", "random", "thompson"]);
}

#[test]
fn every_subcommand_is_reproducible_under_seed_and_thread_count() {
    let (dir, cfg) = setup();
    for (cmd, file) in [
        ("heatmap", "heatmap.csv"),
        ("gossip", "gossip.csv"),
        ("convergence", "selections.csv"),
        ("regret", "regret.csv"),
        ("scalability", "scalability.csv"),
    ] {
        let extra = ["--seed", "42", "--replications", "2"];
        let a = fs::read(run_ok(dir.path(), cmd, &cfg, &format!("{cmd}_a"), &extra).join(file)).unwrap();
        let threaded = ["--seed", "42", "--replications", "2", "--threads", "3"];
        let b = fs::read(run_ok(dir.path(), cmd, &cfg, &format!("{cmd}_b"), &threaded).join(file)).unwrap();
        assert_eq!(a, b, "{cmd} differs between identical runs");
        let c = fs::read(run_ok(dir.path(), cmd, &cfg, &format!("{cmd}_c"), &["--seed", "43", "--replications", "2"]).join(file)).unwrap();
        assert_ne!(a, c, "{cmd} ignores --seed");
    }
}

#[test]
fn flags_beat_environment_beat_file() {
    let (dir, cfg) = setup();
    fs::write(&cfg, format!("master_seed = 5\n{SMALL}")).unwrap();
    let seed_of = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_v2xsim"));
        c.current_dir(dir.path()).args(["heatmap", "--out", "o"]).env("V2XSIM_CONFIG", &cfg).env_remove("V2XSIM_SEED");
        if let Some(e) = env {
            c.env("V2XSIM_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        assert!(c.output().unwrap().status.success());
        manifest(&dir.path().join("o"))["master_seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(None, None), 5);
    assert_eq!(seed_of(Some("6"), None), 6);
    assert_eq!(seed_of(Some("6"), Some("7")), 7);
}

#[test]
fn writes_nothing_outside_out_dir() {
    let (dir, cfg) = setup();
    let before: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    run_ok(dir.path(), "scalability", &cfg, "nested/out", &[]);
    let mut after: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    after.retain(|n| n != "nested");
    assert_eq!(before, after);
    let mut written: Vec<_> = fs::read_dir(dir.path().join("nested/out")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    written.sort();
    assert_eq!(written, vec!["manifest.json", "replications.csv", "scalability.csv"]);
}
