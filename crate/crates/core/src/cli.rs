//! Command-line front end behind the `clutter-grasp` binary.
//!
//! Exit codes: 0 on success, 1 on an operational error (I/O, bad data, a
//! failed validation check), 2 on a usage error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use crate::bench::{run_benchmark, BenchConfig, ScorerChoice, Suite};
use crate::error::{Error, Result};
use crate::evaluator::dataset::{collect_with, load_examples, write_header, write_record, CollectConfig};
use crate::evaluator::train::{class_means, train, Optimizer, TrainConfig};
use crate::generators::GeneratorKind;
use crate::grid::ActionKind;
use crate::policy::{run_episode, Profile};
use crate::scene::{load_scenario, spawn_random_clutter};
use crate::validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "clutter-grasp", version, about = "Target-oriented grasping in tabletop clutter")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Base seed for every derived random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with the subcommand's configuration; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Collect labeled push and grasp datasets from random interaction.
    Collect(CollectArgs),
    /// Fit a scorer to a GEGD dataset.
    Train(TrainArgs),
    /// Run a benchmark suite or ablation.
    Bench(BenchArgs),
    /// Run one episode and print its step log.
    Episode(EpisodeArgs),
    /// Run the invariant and oracle sweeps.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct CollectArgs {
    /// Samples per action kind.
    #[arg(long, default_value_t = 4400)]
    samples: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// GEGD dataset to fit.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Hidden units; 0 trains a linear scorer.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerArg>,
    /// Model file name inside the output directory.
    #[arg(long, default_value = "model.geev")]
    name: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScorerArg {
    Heuristic,
    Trained,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Sct,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Sim,
    RealWorld,
}

#[derive(Debug, Args)]
struct PolicyArgs {
    #[arg(long, value_enum)]
    scorer: Option<ScorerArg>,
    #[arg(long, value_name = "FILE")]
    push_model: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    grasp_model: Option<PathBuf>,
    #[arg(long, value_enum)]
    generator: Option<GeneratorArg>,
    /// Disable every push.
    #[arg(long)]
    grasp_only: bool,
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// random_easy, random_normal, random_hard, random or challenging.
    #[arg(long)]
    suite: Option<String>,
    /// Runs per case.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    /// Directory of challenging scenario files.
    #[arg(long, value_name = "DIR")]
    scenarios: Option<PathBuf>,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Debug, Args)]
struct EpisodeArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "FILE", conflicts_with = "blocks")]
    scenario: Option<PathBuf>,
    /// Random clutter with this many blocks.
    #[arg(long)]
    blocks: Option<usize>,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Scenes per sweep; mask and cap sweeps use the same count.
    #[arg(long, default_value_t = 1000)]
    scenes: usize,
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(Error::InvalidArgument(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("{}", synopsis());
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn synopsis() -> &'static str {
    "usage: clutter-grasp [--seed N] [--config FILE] [--out DIR] <collect|train|bench|episode|validate> [OPTIONS]"
}

fn dispatch(cli: Cli) -> Result<i32> {
    let common = cli.common;
    match cli.command {
        Command::Collect(a) => collect(&common, a),
        Command::Train(a) => train_cmd(&common, a),
        Command::Bench(a) => bench(&common, a),
        Command::Episode(a) => episode(&common, a),
        Command::Validate(a) => validate_cmd(&common, a),
    }
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn out_dir(common: &Common) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn collect(common: &Common, a: CollectArgs) -> Result<i32> {
    let cfg: CollectConfig = load_config(common.config.as_deref())?;
    if a.samples == 0 {
        return Err(Error::InvalidArgument("--samples must be at least 1".into()));
    }
    let dir = out_dir(common)?;
    let seed = common.seed.unwrap_or(0);
    let mut push = BufWriter::new(File::create(dir.join("push.gegd"))?);
    let mut grasp = BufWriter::new(File::create(dir.join("grasp.gegd"))?);
    write_header(&mut push, a.samples)?;
    write_header(&mut grasp, a.samples)?;
    let mut hist = [[0usize; 3]; 2];
    let start = Instant::now();
    collect_with(a.samples, seed, &cfg, |s| {
        let k = (s.kind == ActionKind::Grasp) as usize;
        hist[k][s.value as usize] += 1;
        write_record(if k == 0 { &mut push } else { &mut grasp }, &s)
    })?;
    push.flush()?;
    grasp.flush()?;
    let summary = serde_json::json!({
        "samples_per_kind": a.samples,
        "seed": seed,
        "push_values": hist[0],
        "grasp_values": hist[1],
        "seconds": start.elapsed().as_secs_f64(),
    });
    fs::write(dir.join("collect.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    println!("push values {:?}, grasp values {:?}", hist[0], hist[1]);
    Ok(EXIT_OK)
}

fn train_cmd(common: &Common, a: TrainArgs) -> Result<i32> {
    let mut cfg: TrainConfig = load_config(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.weight_decay {
        cfg.weight_decay = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.hidden {
        cfg.hidden = v;
    }
    if let Some(o) = a.optimizer {
        cfg.optimizer = match o {
            OptimizerArg::Sgd => Optimizer::Sgd,
            OptimizerArg::Adam => Optimizer::Adam,
        };
    }
    cfg.validate()?;
    let data = load_examples(&a.data)?;
    let report = train(&data, &cfg)?;
    let dir = out_dir(common)?;
    report.model.save(dir.join(&a.name))?;
    let mut w = BufWriter::new(File::create(dir.join("loss.csv"))?);
    report.write_loss_csv(&mut w)?;
    w.flush()?;
    for e in &report.history {
        println!("epoch {:3}  train {:.4}  heldout {:.4}", e.epoch, e.train_l1, e.heldout_l1);
    }
    let means = class_means(&report.model, &data, &report.heldout_idx);
    println!("heldout mean score by value: {means:?}");
    Ok(EXIT_OK)
}

fn apply_policy(cfg: &mut BenchConfig, p: &PolicyArgs) -> Result<()> {
    if let Some(s) = p.scorer {
        cfg.scorer = match s {
            ScorerArg::Heuristic => ScorerChoice::Heuristic,
            ScorerArg::Random => ScorerChoice::Random,
            ScorerArg::Trained => match (&p.push_model, &p.grasp_model) {
                (Some(push), Some(grasp)) => ScorerChoice::Trained {
                    push: push.clone(),
                    grasp: grasp.clone(),
                },
                _ => {
                    return Err(Error::InvalidArgument(
                        "--scorer trained needs --push-model and --grasp-model".into(),
                    ))
                }
            },
        };
    } else if p.push_model.is_some() || p.grasp_model.is_some() {
        return Err(Error::InvalidArgument("model paths need --scorer trained".into()));
    }
    if let Some(g) = p.generator {
        cfg.generator = match g {
            GeneratorArg::Sct => GeneratorKind::Sct,
            GeneratorArg::Random => GeneratorKind::Random,
        };
    }
    if p.grasp_only {
        cfg.pushing_enabled = false;
    }
    if let Some(pr) = p.profile {
        cfg.profile = match pr {
            ProfileArg::Sim => Profile::Sim,
            ProfileArg::RealWorld => Profile::RealWorld,
        };
    }
    Ok(())
}

fn bench(common: &Common, a: BenchArgs) -> Result<i32> {
    let mut cfg: BenchConfig = load_config(common.config.as_deref())?;
    if let Some(s) = &a.suite {
        cfg.suite = Suite::parse(s).ok_or_else(|| Error::InvalidArgument(format!("unknown suite `{s}`")))?;
    }
    if let Some(r) = a.runs {
        cfg.runs_per_case = r;
    }
    if let Some(t) = a.threads {
        cfg.threads = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if a.scenarios.is_some() {
        cfg.scenario_dir = a.scenarios.clone();
    }
    apply_policy(&mut cfg, &a.policy)?;
    cfg.validate()?;
    let result = run_benchmark(&cfg)?;
    let dir = out_dir(common)?;
    result.write(&dir)?;
    let o = &result.metrics.overall;
    for c in &result.metrics.cases {
        println!(
            "{:16} SR {:.3}  ME {}",
            c.case,
            c.success_rate,
            c.motion_efficiency.map_or("-".into(), |m| format!("{m:.3}"))
        );
    }
    println!(
        "{:16} SR {:.3}  ME {}  ({} episodes)",
        "overall",
        o.success_rate,
        o.motion_efficiency.map_or("-".into(), |m| format!("{m:.3}")),
        o.episodes
    );
    Ok(EXIT_OK)
}

fn episode(common: &Common, a: EpisodeArgs) -> Result<i32> {
    let mut cfg: BenchConfig = load_config(common.config.as_deref())?;
    apply_policy(&mut cfg, &a.policy)?;
    cfg.validate()?;
    let seed = common.seed.unwrap_or(cfg.seed);
    let scene = match (&a.scenario, a.blocks) {
        (Some(path), _) => load_scenario(path)?,
        (None, Some(n)) => spawn_random_clutter(n, seed)?,
        (None, None) => return Err(Error::InvalidArgument("episode needs --scenario or --blocks".into())),
    };
    let evaluators = cfg.scorer.build(seed)?;
    let result = run_episode(&scene, &evaluators, &cfg.policy(), seed)?;
    for s in &result.log {
        println!(
            "step {} {:5} {:13} at ({:3},{:3}) param {:7.3} score {} outcome {} label {} visible {} o_b {}",
            s.step,
            format!("{:?}", s.kind).to_lowercase(),
            s.source.name(),
            s.x,
            s.y,
            s.param,
            s.score.map_or("-".into(), |v| format!("{v:.3}")),
            s.outcome.map_or("-", |o| o.name()),
            s.label,
            s.visible_px,
            s.border_occupancy
        );
    }
    println!("{} after {} motions", result.outcome.name(), result.motions);
    if common.out.is_some() {
        let dir = out_dir(common)?;
        let mut w = BufWriter::new(File::create(dir.join("episode.jsonl"))?);
        result.write_log(&mut w)?;
        w.flush()?;
    }
    Ok(EXIT_OK)
}

fn validate_cmd(common: &Common, a: ValidateArgs) -> Result<i32> {
    if common.config.is_some() {
        return Err(Error::InvalidArgument("validate takes no --config".into()));
    }
    if a.scenes == 0 {
        return Err(Error::InvalidArgument("--scenes must be at least 1".into()));
    }
    let checks = validate::run_all(a.scenes, common.seed.unwrap_or(0))?;
    let mut ok = true;
    let mut report = String::new();
    for c in &checks {
        println!("{c}");
        report.push_str(&format!("{c}\n"));
        ok &= c.passed();
    }
    if let Some(dir) = &common.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("validate.txt"), report)?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["clutter-grasp", "bench", "--frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["clutter-grasp"]), EXIT_USAGE);
    }

    #[test]
    fn bad_suite_is_usage_error() {
        assert_eq!(run(["clutter-grasp", "bench", "--suite", "nope"]), EXIT_USAGE);
        assert_eq!(run(["clutter-grasp", "bench", "--scorer", "trained"]), EXIT_USAGE);
    }

    #[test]
    fn missing_data_is_operational_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("none.gegd");
        let out = dir.path().join("out");
        let code = run([
            "clutter-grasp".as_ref(),
            "train".as_ref(),
            "--data".as_ref(),
            missing.as_os_str(),
            "--out".as_ref(),
            out.as_os_str(),
        ]);
        assert_eq!(code, EXIT_FAILURE);
    }
}
