mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{completion, dead_url, serve};
use serde_json::Value;

fn uag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uag"))
        .args(args)
        .env_remove("UAG_JUDGE_API_KEY")
        .env_remove("UAG_JUDGE_MODEL")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn write_config(dir: &Path, model: &str, steps: usize, branches: usize, uag: bool) -> PathBuf {
    let path = dir.join("run.json");
    let text = format!(
        r#"{{
  "model": {model},
  "generation": {{
    "schedule": {{"alpha": 0.3395, "beta": 1.3339, "l0": 5, "delta": 0.5479, "horizon": {steps}}},
    "temperature": 1.0, "max_steps": {steps}, "branches": {branches}, "seed": 3, "uag_enabled": {uag}
  }}
}}"#
    );
    fs::write(&path, text).unwrap();
    path
}

fn toy_ar() -> &'static str {
    r#"{"kind": "toy_ar", "vocab_size": 32, "hidden_size": 16, "seed": 1}"#
}

fn prompts(dir: &Path) -> PathBuf {
    let path = dir.join("prompts.txt");
    fs::write(&path, "t1 t2\n\nonce upon a time\n").unwrap();
    path
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn naive_generate_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), toy_ar(), 12, 3, false);
    let out = dir.path().join("out");
    let res = uag(&["generate", "--config", s(&cfg), "--prompts", s(&prompts(dir.path())), "--out", s(&out), "--quiet"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(res.stderr.is_empty());
    let branches = fs::read_to_string(out.join("branches.jsonl")).unwrap();
    assert_eq!(branches.lines().count(), 2 * 3);
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 2 * 3 * 12);
    let report = read_json(out.join("report.json"));
    assert_eq!(report["kind"], "text");
    assert!(report["mean"]["self_bleu"].is_number());
    let manifest = read_json(out.join("manifest.json"));
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let stats = manifest["branches"].as_array().unwrap();
    assert_eq!(stats.len(), 6);
    // naive branches cost exactly the model steps: 12 * (2*16^2 + 2*16 + 2*32*16 + 32)
    assert!(stats.iter().all(|b| b["total_flops"] == 12 * (2 * 256 + 32 + 2 * 32 * 16 + 32)));
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("config_hash,scope,metric,value\n"));
}

#[test]
fn seed_override_changes_outputs_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), toy_ar(), 8, 2, true);
    let p = prompts(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(uag(&["generate", "--config", s(&cfg), "--prompts", s(&p), "--out", s(&a), "--quiet"]).status.success());
    assert!(uag(&["generate", "--config", s(&cfg), "--prompts", s(&p), "--out", s(&b), "--seed", "99", "--quiet"])
        .status
        .success());
    assert_ne!(fs::read(a.join("branches.jsonl")).unwrap(), fs::read(b.join("branches.jsonl")).unwrap());
    assert_eq!(read_json(b.join("manifest.json"))["seed"], 99);
    assert_ne!(read_json(a.join("manifest.json"))["config_hash"], read_json(b.join("manifest.json"))["config_hash"]);
}

#[test]
fn malformed_config_exits_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"model\": {\"kind\": \"toy_ar\",}\n}").unwrap();
    let res = uag(&["generate", "--config", s(&cfg), "--prompts", s(&prompts(dir.path())), "--out", s(&dir.path().join("o"))]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("bad.json:2:"), "{err}");

    let cfg = write_config(dir.path(), toy_ar(), 8, 0, true);
    let res = uag(&["generate", "--config", s(&cfg), "--prompts", s(&prompts(dir.path())), "--out", s(&dir.path().join("o"))]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn diffusion_generate_reports_latent_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let model = r#"{"kind": "toy_diffusion", "latent_size": 8, "steps": 20, "seed": 2}"#;
    let cfg = write_config(dir.path(), model, 20, 3, true);
    let out = dir.path().join("out");
    let res = uag(&["generate", "--config", s(&cfg), "--prompts", s(&prompts(dir.path())), "--out", s(&out), "--quiet"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = read_json(out.join("report.json"));
    assert_eq!(report["kind"], "latent");
    assert!(report["mean"]["pairwise_cosine"].is_number());
    assert!(uag(&["eval", "--out", s(&out), "--quiet"]).status.success());
    assert_eq!(read_json(out.join("eval_report.json")), report);
}

#[test]
fn eval_reproduces_the_generate_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), toy_ar(), 10, 4, false);
    let out = dir.path().join("out");
    assert!(uag(&["generate", "--config", s(&cfg), "--prompts", s(&prompts(dir.path())), "--out", s(&out), "--quiet"])
        .status
        .success());
    let res = uag(&["eval", "--out", s(&out), "--quiet"]);
    assert!(res.status.success());
    assert_eq!(fs::read(out.join("eval_report.json")).unwrap(), fs::read(out.join("report.json")).unwrap());
}

#[test]
fn eval_with_judge_adds_scores() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), toy_ar(), 10, 3, true);
    let out = dir.path().join("out");
    assert!(uag(&["generate", "--config", s(&cfg), "--prompts", s(&prompts(dir.path())), "--out", s(&out), "--quiet"])
        .status
        .success());
    let server = serve(vec![(200, completion(r#"{"score": 0.25, "diversity_score": 0.25, "reason": "mock"}"#))]);
    let res = uag(&["eval", "--out", s(&out), "--judge", "--judge-url", &server.url, "--quiet"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = read_json(out.join("eval_report.json"));
    assert_eq!(report["llm_diversity"], 0.25);
    assert_eq!(report["llm_degeneration"], 0.25);
    // two prompts x two rubrics
    assert_eq!(server.hits(), 4);
    assert!(server.last().header("authorization").is_none());
}

#[test]
fn judge_failure_keeps_offline_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), toy_ar(), 10, 3, true);
    let out = dir.path().join("out");
    assert!(uag(&["generate", "--config", s(&cfg), "--prompts", s(&prompts(dir.path())), "--out", s(&out), "--quiet"])
        .status
        .success());
    let res = uag(&["eval", "--out", s(&out), "--judge", "--judge-url", &dead_url(), "--quiet"]);
    assert_eq!(res.status.code(), Some(2));
    let report = read_json(out.join("eval_report.json"));
    assert!(report["judge_error"].is_string());
    assert_eq!(report["mean"], read_json(out.join("report.json"))["mean"]);
    assert!(report.get("llm_diversity").is_none());
}

#[test]
fn eval_of_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(uag(&["eval", "--out", s(dir.path()), "--quiet"]).status.code(), Some(2));
}

#[test]
fn sweep_grid_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), toy_ar(), 10, 3, true);
    let space = dir.path().join("space.json");
    fs::write(&space, r#"{"alpha": {"grid": [0.0, 1.0]}, "beta": {"grid": [0.0, 2.0]}, "budget": 4}"#).unwrap();
    let out = dir.path().join("sweep");
    let res = uag(&["sweep", "--config", s(&cfg), "--space", s(&space), "--prompts", s(&prompts(dir.path())), "--out", s(&out), "--quiet"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "run_id,alpha,beta,l0,delta,temperature,diversity,degeneration,pareto");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,0,0,") && lines[4].starts_with("3,1,2,"));
    let plot = read_json(out.join("pareto.json"));
    assert_eq!(plot["x"].as_array().unwrap().len(), 4);
    assert!(!plot["front"].as_array().unwrap().is_empty());
    assert!(out.join("best.json").exists());
}

#[test]
fn degenerate_sweep_skips_best_point_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let model = format!(r#"{{"kind": "bigram", "path": "{}"}}"#, fixture("loop_bigram.json"));
    let cfg = write_config(dir.path(), &model, 20, 3, true);
    let space = dir.path().join("space.json");
    fs::write(&space, r#"{"alpha": {"grid": [0.0, 0.1]}, "budget": 2}"#).unwrap();
    let out = dir.path().join("sweep");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("best.json"), "stale").unwrap();
    let res = uag(&["sweep", "--config", s(&cfg), "--space", s(&space), "--prompts", s(&prompts(dir.path())), "--out", s(&out), "--quiet"]);
    assert_eq!(res.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&res.stderr).contains("warning"));
    assert!(!out.join("best.json").exists());
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 3);
}

#[test]
fn sweep_rejects_latent_models_and_bad_spaces() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("space.json");
    fs::write(&space, r#"{"budget": 1}"#).unwrap();
    let p = prompts(dir.path());
    let out = dir.path().join("o");
    let model = r#"{"kind": "toy_diffusion", "latent_size": 4, "steps": 10, "seed": 2}"#;
    let cfg = write_config(dir.path(), model, 10, 2, true);
    assert_eq!(uag(&["sweep", "--config", s(&cfg), "--space", s(&space), "--prompts", s(&p), "--out", s(&out)]).status.code(), Some(1));
    let cfg = write_config(dir.path(), toy_ar(), 10, 2, true);
    fs::write(&space, "{\"budget\": 0}").unwrap();
    assert_eq!(uag(&["sweep", "--config", s(&cfg), "--space", s(&space), "--prompts", s(&p), "--out", s(&out)]).status.code(), Some(1));
    fs::write(&space, "{\"budget\": }").unwrap();
    let res = uag(&["sweep", "--config", s(&cfg), "--space", s(&space), "--prompts", s(&p), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("space.json:1:"));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(uag(&["generate"]).status.code(), Some(1));
    assert_eq!(uag(&["--help"]).status.code(), Some(0));
}
