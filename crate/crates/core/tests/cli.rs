use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_brisk");

fn scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn two_dim(levels: &str) -> String {
    format!(
        r#"{{
  "schema_version": 1,
  "model": {{"equicorr": {{"dim": 2, "rho": 0.5}}}},
  "barrier": [1.0, 0.8],
  "trend": {{"type": "point_mass", "c": [0.0, 0.0]}},
  "horizon": 1.0,
  "levels": [{levels}],
  "budgets": {{"n_steps": 256, "n_paths": 2000, "tail_budget": 20000, "ia_paths": 1000, "ia_lambda": 5.0}},
  "master_seed": 17
}}"#
    )
}

const ONE_DIM: &str = r#"{
  "schema_version": 1,
  "model": {"mixing": [[1.0]]},
  "barrier": [1.0],
  "trend": {"type": "point_mass", "c": [0.0]},
  "horizon": 1.0,
  "levels": [1.0],
  "budgets": {"n_steps": 1024, "n_paths": 20000, "tail_budget": 20000, "ia_paths": 1000, "ia_lambda": 5.0},
  "master_seed": 5
}"#;

fn brisk(cache: &Path, args: &[&str]) -> Output {
    brisk_env(cache, args, &[])
}

fn brisk_env(cache: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env("BRISK_CACHE_DIR", cache).env_remove("BRISK_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_column(text: &str, col: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == col).unwrap();
    lines.map(|l| l.split(',').nth(j).unwrap().parse().unwrap()).collect()
}

#[test]
fn qp_prints_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "s.json", &two_dim("2.0"));
    let o = brisk(dir.path(), &["qp", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("I         = [1, 2]"), "{}", stdout(&o));
    let o = brisk(dir.path(), &["qp", s.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lambda: Vec<f64> = serde_json::from_value(v["lambda"].clone()).unwrap();
    assert!((lambda[0] - 0.8).abs() < 1e-10 && (lambda[1] - 0.4).abs() < 1e-10);
    assert_eq!(v["active_set"], serde_json::json!([1, 2]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let neg = two_dim("2.0").replace("[1.0, 0.8]", "[-1.0, -1.0]");
    let s = scenario(dir.path(), "neg.json", &neg);
    let o = brisk(dir.path(), &["qp", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("barrier"), "{}", stderr(&o));

    let typo = two_dim("2.0").replace("\"n_paths\"", "\"n_path\"");
    let s = scenario(dir.path(), "typo.json", &typo);
    let o = brisk(dir.path(), &["simulate", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_path"), "{}", stderr(&o));

    let o = brisk(dir.path(), &["simulate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let s = scenario(dir.path(), "s.json", &two_dim("2.0, 2.1"));
    let o = brisk(dir.path(), &["validate", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("SpanTooNarrow"));

    let o = brisk(dir.path(), &["simulate", s.to_str().unwrap(), "--csv", "/nonexistent-dir/out.csv"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn simulate_reflection_target() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "one.json", ONE_DIM);
    let out = dir.path().join("out.csv");
    let o = brisk(dir.path(), &["simulate", s.to_str().unwrap(), "--csv", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("u,psi_hat,stderr,n_paths,n_steps,seed\n"));
    let psi = csv_column(&text, "psi_hat")[0];
    let se = csv_column(&text, "stderr")[0];
    // 2Φ̄(1) = 0.3173 for the continuous path; the grid reads lower.
    assert!(psi < 0.3173 + 3.0 * se && psi > 0.3173 - 3.0 * se - 0.02, "{psi}");
}

#[test]
fn asym_cache_and_tail_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let s = scenario(dir.path(), "s.json", &two_dim("2.0, 3.0"));
    let p = s.to_str().unwrap();
    let first = brisk(&cache, &["asym", p]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert!(!stderr(&first).contains("cache hit"));
    let second = brisk(&cache, &["asym", p]);
    assert!(stderr(&second).contains("cache hit"));
    assert_eq!(first.stdout, second.stdout);

    let tail = brisk(&cache, &["tail", p]);
    assert_eq!(csv_column(&stdout(&tail), "tail"), csv_column(&stdout(&first), "tail"));

    let list = brisk(&cache, &["cache", "list"]);
    assert_eq!(stdout(&list).lines().count(), 1);
    let entry = cache.join(stdout(&list).trim());
    std::fs::write(&entry, "garbage").unwrap();
    let third = brisk(&cache, &["asym", p]);
    assert!(stderr(&third).contains("warning"), "{}", stderr(&third));
    assert_eq!(first.stdout, third.stdout);

    let clear = brisk(&cache, &["cache", "clear"]);
    assert_eq!(clear.status.code(), Some(0));
    let fourth = brisk(&cache, &["asym", p]);
    assert!(!stderr(&fourth).contains("cache hit"));
    assert_eq!(first.stdout, fourth.stdout);
}

#[test]
fn validate_one_dim_uses_exact_reference() {
    let dir = tempfile::tempdir().unwrap();
    let body = ONE_DIM
        .replace("\"c\": [0.0]", "\"c\": [1.0]")
        .replace("[1.0],\n  \"budgets\"", "[0.5, 1.0],\n  \"budgets\"");
    let s = scenario(dir.path(), "one.json", &body);
    let o = brisk(dir.path(), &["validate", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("verdict: PASS"), "{}{}", stdout(&o), stderr(&o));
    let refs = csv_column(&stdout(&o), "psi_ref");
    assert!((refs[1] - 0.090418).abs() < 1e-6);
}

#[test]
fn seed_override_changes_hash_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "s.json", &two_dim("2.0"));
    let p = s.to_str().unwrap();
    let a = brisk(dir.path(), &["simulate", p, "--json"]);
    let b = brisk(dir.path(), &["simulate", p, "--json", "--seed", "99"]);
    let va: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let vb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_ne!(va["scenario_hash"], vb["scenario_hash"]);
    assert_eq!(va["rows"][0]["wall_time_ms"], serde_json::Value::Null);
    let t = brisk(dir.path(), &["simulate", p, "--json", "--timing"]);
    let vt: serde_json::Value = serde_json::from_slice(&t.stdout).unwrap();
    assert!(vt["rows"][0]["wall_time_ms"].as_f64().unwrap() >= 0.0);
    let lv = brisk(dir.path(), &["simulate", p, "--levels", "1.5,2.5"]);
    assert_eq!(csv_column(&stdout(&lv), "u"), vec![1.5, 2.5]);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "s.json", &two_dim("1.0, 2.0, 3.0"));
    let p = s.to_str().unwrap();
    let one = brisk_env(dir.path(), &["simulate", p], &[("BRISK_THREADS", "1")]);
    let four = brisk_env(dir.path(), &["simulate", p], &[("BRISK_THREADS", "4")]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let bad = brisk_env(dir.path(), &["simulate", p], &[("BRISK_THREADS", "many")]);
    assert_eq!(bad.status.code(), Some(4));
}
