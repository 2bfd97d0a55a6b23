//! Batch driver behind the `uag` binary.
//!
//! ```text
//! uag generate --config run.json --prompts prompts.txt --out DIR [--seed N]
//! uag sweep    --config run.json --space space.json --prompts prompts.txt --out DIR [--seed N]
//! uag eval     --out DIR [--judge] [--judge-url URL]
//! ```
//!
//! Exit status is 0 on success, 1 for configuration or input errors and 2 for
//! runtime failures.
//!
//! `generate` writes `branches.jsonl`, `trace.jsonl`, `report.json`,
//! `report.csv` and `manifest.json`. Only the manifest carries timestamps and
//! wall times; every other file is reproducible byte for byte.
//! `sweep` writes `sweep.csv`, `pareto.json` and, when some point stays under
//! the degeneration ceiling, `best.json`. `eval` recomputes the report of a
//! generate directory into `eval_report.json`, optionally adding judge scores.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{LoadedModel, RunConfig};
use crate::judge::{JudgeClient, JudgeConfig, JudgeKind};
use crate::metrics::{DiversityReport, LatentDiversityReport};
use crate::process::{multi_branch, multi_branch_latent, Branch};
use crate::sweep::{pareto_front, run_sweep, select_best, to_csv, SweepSpace, DEFAULT_MAX_DEGEN};

const DEFAULT_JUDGE_URL: &str = "https://api.openai.com/v1";

#[derive(Debug, Parser)]
#[command(name = "uag", version, about = "Avoidance-guided multi-branch generation")]
struct Cli {
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate guided branches for every prompt and report their diversity.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// One prompt per line; blank lines are skipped.
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the generation seed of the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep schedule parameters and temperature; write the Pareto front.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute the report of a generate output directory.
    Eval {
        #[arg(long)]
        out: PathBuf,
        /// Also score each prompt's branches with an LLM judge.
        #[arg(long)]
        judge: bool,
        #[arg(long, default_value = DEFAULT_JUDGE_URL)]
        judge_url: String,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

struct Ctx {
    quiet: bool,
}

impl Ctx {
    fn info(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let ctx = Ctx { quiet: cli.quiet };
    let result = match cli.command {
        Command::Generate { config, prompts, out, seed } => cmd_generate(&ctx, &config, &prompts, &out, seed),
        Command::Sweep { config, space, prompts, out, seed } => cmd_sweep(&ctx, &config, &space, &prompts, &out, seed),
        Command::Eval { out, judge, judge_url } => cmd_eval(&ctx, &out, judge.then_some(judge_url.as_str())),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let (CliError::Config(m) | CliError::Runtime(m)) = &e;
            eprintln!("error: {m}");
            e.code()
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_json(&text).map_err(|e| config_err(format!("{}:{e}", path.display())))?;
    if let Some(s) = seed {
        cfg.generation.seed = s;
    }
    cfg.validate().map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn load_prompts(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let prompts: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if prompts.is_empty() {
        return Err(config_err(format!("{}: no prompts", path.display())));
    }
    Ok(prompts)
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::write(dir.join(name), contents).map_err(|e| runtime_err(format!("{}: {e}", dir.join(name).display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Branch outputs of one prompt, as stored in `branches.jsonl`.
#[derive(Debug, Clone, PartialEq)]
enum PromptOutputs {
    Texts(Vec<Vec<usize>>),
    Latents(Vec<Vec<f64>>),
}

fn metric_map(rows: &[(&'static str, f64)]) -> BTreeMap<&'static str, f64> {
    rows.iter().copied().collect()
}

/// Per-prompt metrics (null when a prompt has fewer than two branches) and
/// their mean over prompts.
fn build_report(outputs: &[PromptOutputs]) -> CliResult<Value> {
    let kind = match outputs.first() {
        Some(PromptOutputs::Latents(_)) => "latent",
        _ => "text",
    };
    let mut per_prompt = Vec::with_capacity(outputs.len());
    for o in outputs {
        let rows = match o {
            PromptOutputs::Texts(t) if t.len() >= 2 => Some(metric_map(&DiversityReport::compute(t).map_err(runtime_err)?.rows())),
            PromptOutputs::Latents(z) if z.len() >= 2 => {
                Some(metric_map(&LatentDiversityReport::compute(z).map_err(runtime_err)?.rows()))
            }
            _ => None,
        };
        per_prompt.push(rows);
    }
    let present: Vec<&BTreeMap<&str, f64>> = per_prompt.iter().flatten().collect();
    let mean = present.first().map(|first| {
        first
            .keys()
            .map(|k| (*k, present.iter().map(|m| m[k]).sum::<f64>() / present.len() as f64))
            .collect::<BTreeMap<_, _>>()
    });
    Ok(json!({ "kind": kind, "per_prompt": per_prompt, "mean": mean }))
}

fn report_csv(hash: &str, report: &Value) -> String {
    let mut out = String::from("config_hash,scope,metric,value\n");
    let mut rows = |scope: &str, m: &Value| {
        if let Some(m) = m.as_object() {
            for (k, v) in m {
                out.push_str(&format!("{hash},{scope},{k},{v}\n"));
            }
        }
    };
    rows("mean", &report["mean"]);
    if let Some(list) = report["per_prompt"].as_array() {
        for (i, m) in list.iter().enumerate() {
            rows(&format!("prompt_{i}"), m);
        }
    }
    out
}

fn generate_all(model: &LoadedModel, cfg: &RunConfig, prompts: &[String]) -> CliResult<Vec<Vec<Branch>>> {
    let g = &cfg.generation;
    prompts
        .par_iter()
        .map(|p| match model {
            LoadedModel::Language(m) => multi_branch(m.as_ref(), &m.tokenizer().encode(p), g),
            LoadedModel::Diffusion(m) => multi_branch_latent(m, &m.condition(p), g),
        })
        .collect::<crate::Result<Vec<_>>>()
        .map_err(runtime_err)
}

fn cmd_generate(ctx: &Ctx, config: &Path, prompts: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let started = unix_now();
    let cfg = load_config(config, seed)?;
    let prompt_texts = load_prompts(prompts)?;
    let model = cfg.load_model(base_dir(config)).map_err(config_err)?;
    fs::create_dir_all(out).map_err(|e| runtime_err(format!("{}: {e}", out.display())))?;
    let hash = cfg.hash();
    ctx.info(&format!("generating {} prompt(s) x {} branch(es), config {}", prompt_texts.len(), cfg.generation.branches, &hash[..12]));

    let results = generate_all(&model, &cfg, &prompt_texts)?;

    let (mut branches_jsonl, mut trace_jsonl) = (String::new(), String::new());
    let mut outputs = Vec::with_capacity(results.len());
    let mut branch_stats = Vec::new();
    for (pi, branches) in results.iter().enumerate() {
        let mut texts = Vec::new();
        let mut latents = Vec::new();
        for b in branches {
            let mut line = Map::new();
            line.insert("prompt_index".into(), json!(pi));
            line.insert("branch".into(), json!(b.index));
            match (&model, b.tokens(), b.latent()) {
                (LoadedModel::Language(m), Some(tokens), _) => {
                    line.insert("tokens".into(), json!(tokens));
                    line.insert("text".into(), json!(m.tokenizer().decode(tokens)));
                    texts.push(tokens.to_vec());
                }
                (_, _, Some(z)) => {
                    line.insert("latent".into(), json!(z));
                    latents.push(z.to_vec());
                }
                _ => unreachable!("branch output matches model kind"),
            }
            branches_jsonl.push_str(&Value::Object(line).to_string());
            branches_jsonl.push('\n');
            for rec in &b.trace {
                let mut v = serde_json::to_value(rec).expect("records serialize");
                v["prompt_index"] = json!(pi);
                v["branch"] = json!(b.index);
                trace_jsonl.push_str(&v.to_string());
                trace_jsonl.push('\n');
            }
            branch_stats.push(json!({
                "prompt_index": pi,
                "branch": b.index,
                "total_flops": b.total_flops,
                "wall_time": b.wall_time,
            }));
        }
        outputs.push(if latents.is_empty() { PromptOutputs::Texts(texts) } else { PromptOutputs::Latents(latents) });
    }
    let report = build_report(&outputs)?;

    write(out, "branches.jsonl", &branches_jsonl)?;
    write(out, "trace.jsonl", &trace_jsonl)?;
    write(out, "report.json", &pretty(&report))?;
    write(out, "report.csv", &report_csv(&hash, &report))?;
    let manifest = json!({
        "config_hash": hash,
        "config": cfg,
        "seed": cfg.generation.seed,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "started_at": started,
        "finished_at": unix_now(),
        "outputs": ["branches.jsonl", "trace.jsonl", "report.json", "report.csv", "manifest.json"],
        "branches": branch_stats,
    });
    write(out, "manifest.json", &pretty(&manifest))?;
    ctx.info(&format!("wrote {}", out.display()));
    Ok(())
}

fn cmd_sweep(ctx: &Ctx, config: &Path, space: &Path, prompts: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let cfg = load_config(config, seed)?;
    let space_text = fs::read_to_string(space).map_err(|e| config_err(format!("{}: {e}", space.display())))?;
    let space_def: SweepSpace = serde_json::from_str(&space_text).map_err(|e| {
        config_err(format!("{}:{}:{}: {e}", space.display(), e.line(), e.column()))
    })?;
    space_def.validate().map_err(|e| config_err(format!("{}: {e}", space.display())))?;
    let prompt_texts = load_prompts(prompts)?;
    let model = match cfg.load_model(base_dir(config)).map_err(config_err)? {
        LoadedModel::Language(m) => m,
        LoadedModel::Diffusion(_) => return Err(config_err("sweep supports language models only")),
    };
    let encoded: Vec<Vec<usize>> = prompt_texts.iter().map(|p| model.tokenizer().encode(p)).collect();
    fs::create_dir_all(out).map_err(|e| runtime_err(format!("{}: {e}", out.display())))?;
    ctx.info(&format!("sweeping up to {} point(s)", space_def.budget));

    let points = run_sweep(&space_def, &cfg.generation, model.as_ref(), &encoded, cfg.generation.seed).map_err(runtime_err)?;
    let front = pareto_front(&points);
    write(out, "sweep.csv", &to_csv(&points, &front))?;
    let plot = json!({
        "x": points.iter().map(|p| p.diversity).collect::<Vec<_>>(),
        "y": points.iter().map(|p| p.degeneration).collect::<Vec<_>>(),
        "run_id": points.iter().map(|p| p.run_id).collect::<Vec<_>>(),
        "front": front.indices,
    });
    write(out, "pareto.json", &pretty(&plot))?;
    let best_path = out.join("best.json");
    match select_best(&front.points, DEFAULT_MAX_DEGEN) {
        Ok(best) => write(out, "best.json", &pretty(&json!(best)))?,
        Err(e) => {
            eprintln!("warning: {e}; best.json not written");
            if best_path.exists() {
                fs::remove_file(&best_path).map_err(runtime_err)?;
            }
        }
    }
    ctx.info(&format!("wrote {} point(s) to {}", points.len(), out.display()));
    Ok(())
}

fn read_outputs(dir: &Path) -> CliResult<(Vec<PromptOutputs>, Vec<Vec<String>>)> {
    let path = dir.join("branches.jsonl");
    let text = fs::read_to_string(&path).map_err(|e| runtime_err(format!("{}: {e}", path.display())))?;
    let mut grouped: BTreeMap<u64, Vec<(u64, Value)>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line).map_err(|e| runtime_err(format!("{}:{}: {e}", path.display(), i + 1)))?;
        let (Some(p), Some(b)) = (v["prompt_index"].as_u64(), v["branch"].as_u64()) else {
            return Err(runtime_err(format!("{}:{}: missing prompt_index or branch", path.display(), i + 1)));
        };
        grouped.entry(p).or_default().push((b, v));
    }
    if grouped.is_empty() {
        return Err(runtime_err(format!("{}: no branches", path.display())));
    }
    let mut outputs = Vec::new();
    let mut texts = Vec::new();
    for (_, mut branches) in grouped {
        branches.sort_by_key(|(b, _)| *b);
        let parsed = if branches[0].1.get("latent").is_some() {
            branches
                .iter()
                .map(|(_, v)| serde_json::from_value::<Vec<f64>>(v["latent"].clone()))
                .collect::<Result<Vec<_>, _>>()
                .map(PromptOutputs::Latents)
        } else {
            branches
                .iter()
                .map(|(_, v)| serde_json::from_value::<Vec<usize>>(v["tokens"].clone()))
                .collect::<Result<Vec<_>, _>>()
                .map(PromptOutputs::Texts)
        };
        outputs.push(parsed.map_err(|e| runtime_err(format!("{}: {e}", path.display())))?);
        texts.push(branches.iter().map(|(_, v)| v["text"].as_str().unwrap_or_default().to_string()).collect());
    }
    Ok((outputs, texts))
}

/// Mean judge score per kind over prompts.
fn judge_outputs(url: &str, texts: &[Vec<String>]) -> Result<(f64, f64), String> {
    let mut cfg = JudgeConfig::from_env(url);
    cfg.backoff = Duration::from_millis(250);
    let client = JudgeClient::new(cfg).map_err(|e| e.to_string())?;
    let (mut div, mut degen) = (0.0, 0.0);
    for samples in texts {
        div += client.judge(JudgeKind::Diversity, samples).map_err(|e| e.to_string())?.score.score;
        degen += client.judge(JudgeKind::Degeneration, samples).map_err(|e| e.to_string())?.score.score;
    }
    let n = texts.len() as f64;
    Ok((div / n, degen / n))
}

fn cmd_eval(ctx: &Ctx, dir: &Path, judge_url: Option<&str>) -> CliResult<()> {
    let (outputs, texts) = read_outputs(dir)?;
    let mut report = build_report(&outputs)?;
    let mut failure = None;
    if let Some(url) = judge_url {
        if report["kind"] != "text" {
            failure = Some("the judge scores text branches only".to_string());
        } else {
            ctx.info(&format!("judging {} prompt(s)", texts.len()));
            match judge_outputs(url, &texts) {
                Ok((div, degen)) => {
                    report["llm_diversity"] = json!(div);
                    report["llm_degeneration"] = json!(degen);
                }
                Err(e) => failure = Some(e),
            }
        }
    }
    if let Some(e) = &failure {
        report["judge_error"] = json!(e);
    }
    write(dir, "eval_report.json", &pretty(&report))?;
    match failure {
        Some(e) => Err(runtime_err(format!("judge: {e}"))),
        None => {
            ctx.info(&format!("wrote {}", dir.join("eval_report.json").display()));
            Ok(())
        }
    }
}
