//! Seeded benchmark suites and their metrics.
//!
//! Every episode gets its own seed derived from the configuration seed, the
//! case index and the run index, so two configurations with the same seed see
//! the same scenes whatever scorer or generator they use.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{Evaluators, TrainableScorer};
use crate::generators::{generate_grasps, GeneratorConfig, GeneratorKind};
use crate::policy::{run_episode, EpisodeOutcome, PolicyConfig, Profile, StepLog};
use crate::scene::{load_scenario, spawn_random_clutter, Scene};
use crate::seed::derive;

pub const CHALLENGING_CASES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    RandomEasy,
    RandomNormal,
    RandomHard,
    /// The three random-clutter cases together.
    Random,
    Challenging,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "random_easy" => Suite::RandomEasy,
            "random_normal" => Suite::RandomNormal,
            "random_hard" => Suite::RandomHard,
            "random" => Suite::Random,
            "challenging" => Suite::Challenging,
            _ => return None,
        })
    }

    /// Block counts of the random cases.
    pub fn block_counts(self) -> &'static [usize] {
        match self {
            Suite::RandomEasy => &[10],
            Suite::RandomNormal => &[15],
            Suite::RandomHard => &[20],
            Suite::Random => &[10, 15, 20],
            Suite::Challenging => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScorerChoice {
    Heuristic,
    Trained { push: PathBuf, grasp: PathBuf },
    Random,
}

impl ScorerChoice {
    pub fn name(&self) -> &'static str {
        match self {
            ScorerChoice::Heuristic => "heuristic",
            ScorerChoice::Trained { .. } => "trained",
            ScorerChoice::Random => "random",
        }
    }

    pub fn build(&self, seed: u64) -> Result<Evaluators> {
        Ok(match self {
            ScorerChoice::Heuristic => Evaluators::heuristic(),
            ScorerChoice::Trained { push, grasp } => {
                Evaluators::new(TrainableScorer::load(push)?, TrainableScorer::load(grasp)?)
            }
            ScorerChoice::Random => Evaluators::random(seed),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub suite: Suite,
    pub runs_per_case: usize,
    pub profile: Profile,
    pub scorer: ScorerChoice,
    pub generator: GeneratorKind,
    pub pushing_enabled: bool,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// Directory of the challenging scenarios; defaults to the shipped set.
    pub scenario_dir: Option<PathBuf>,
    pub generator_config: GeneratorConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            suite: Suite::RandomEasy,
            runs_per_case: 30,
            profile: Profile::Sim,
            scorer: ScorerChoice::Heuristic,
            generator: GeneratorKind::Sct,
            pushing_enabled: true,
            seed: 0,
            threads: 0,
            scenario_dir: None,
            generator_config: GeneratorConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs_per_case == 0 {
            return Err(Error::InvalidArgument("runs_per_case must be at least 1".into()));
        }
        self.policy().validate()
    }

    pub fn policy(&self) -> PolicyConfig {
        PolicyConfig {
            pushing_enabled: self.pushing_enabled,
            generator: self.generator,
            generator_config: self.generator_config.clone(),
            ..PolicyConfig::with_profile(self.profile)
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            field: e.to_string().split('`').nth(1).unwrap_or("document").to_owned(),
            message: e.to_string(),
        })
    }
}

pub fn default_scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join("challenging")
}

/// Whether any SCT grasp candidate is centered on the target.
pub fn has_initial_target_grasp(scene: &Scene) -> Result<bool> {
    let hm = scene.render_heightmap();
    let tmask = scene.target_mask()?;
    match generate_grasps(&hm, &tmask, &GeneratorConfig::default(), 0) {
        Ok(g) => Ok(g.iter().any(|c| c.on_target)),
        Err(Error::NoCandidates) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Load every `*.json` scenario in `dir`, sorted by file name, and check that
/// none admits a direct grasp of the target.
pub fn load_challenging_suite(dir: impl AsRef<Path>) -> Result<Vec<(String, Scene)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let scene = load_scenario(&p)?;
        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        if scene.target_mask()?.is_empty() {
            return Err(Error::Format(format!("{name}: target not visible")));
        }
        if has_initial_target_grasp(&scene)? {
            return Err(Error::Format(format!("{name}: target admits a direct grasp")));
        }
        out.push((name, scene));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub case: String,
    pub run: usize,
    pub seed: u64,
    pub scene_hash: String,
    pub outcome: EpisodeOutcome,
    pub motions: usize,
    pub pushes: usize,
    pub grasps: usize,
}

impl EpisodeRecord {
    pub fn success(&self) -> bool {
        self.outcome == EpisodeOutcome::Success
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub case: String,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Population standard deviation of the per-episode success indicator.
    pub success_std: f64,
    /// Mean motions over successful episodes; absent without successes.
    pub motion_efficiency: Option<f64>,
    /// Population standard deviation of motions over successful episodes.
    pub motion_efficiency_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub suite: Suite,
    pub scorer: String,
    pub generator: GeneratorKind,
    pub pushing_enabled: bool,
    pub seed: u64,
    pub overall: CaseMetrics,
    pub cases: Vec<CaseMetrics>,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

pub fn case_metrics(case: &str, records: &[&EpisodeRecord]) -> CaseMetrics {
    let hits: Vec<f64> = records.iter().map(|r| r.success() as u8 as f64).collect();
    let motions: Vec<f64> = records.iter().filter(|r| r.success()).map(|r| r.motions as f64).collect();
    let (sr, sr_std) = mean_std(&hits).unwrap_or((0.0, 0.0));
    let me = mean_std(&motions);
    CaseMetrics {
        case: case.to_owned(),
        episodes: records.len(),
        successes: motions.len(),
        success_rate: sr,
        success_std: sr_std,
        motion_efficiency: me.map(|m| m.0),
        motion_efficiency_std: me.map(|m| m.1),
    }
}

/// Aggregate records; cases appear in first-seen order.
pub fn compute_metrics(cfg: &BenchConfig, records: &[EpisodeRecord]) -> Metrics {
    let mut names: Vec<&str> = Vec::new();
    for r in records {
        if !names.contains(&r.case.as_str()) {
            names.push(&r.case);
        }
    }
    let cases = names
        .iter()
        .map(|n| case_metrics(n, &records.iter().filter(|r| r.case == *n).collect::<Vec<_>>()))
        .collect();
    Metrics {
        suite: cfg.suite,
        scorer: cfg.scorer.name().to_owned(),
        generator: cfg.generator,
        pushing_enabled: cfg.pushing_enabled,
        seed: cfg.seed,
        overall: case_metrics("all", &records.iter().collect::<Vec<_>>()),
        cases,
    }
}

pub const CSV_HEADER: &str = "case,run,seed,scene_hash,outcome,motions,pushes,grasps";

pub fn records_to_csv(records: &[EpisodeRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.case,
            r.run,
            r.seed,
            r.scene_hash,
            r.outcome.name(),
            r.motions,
            r.pushes,
            r.grasps
        );
    }
    s
}

pub fn records_from_csv(text: &str, path: &str) -> Result<Vec<EpisodeRecord>> {
    let fields: Vec<&str> = CSV_HEADER.split(',').collect();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                field: "header".into(),
                message: "unexpected episode CSV header".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let err = |k: usize, m: &str| Error::Parse {
            path: path.into(),
            line: i + 1,
            field: fields.get(k).copied().unwrap_or("row").into(),
            message: m.into(),
        };
        if cols.len() != fields.len() {
            return Err(err(fields.len(), "wrong column count"));
        }
        let num = |k: usize| cols[k].parse::<u64>().map_err(|_| err(k, "not an integer"));
        let outcome = match cols[4] {
            "success" => EpisodeOutcome::Success,
            "exceeded_budget" => EpisodeOutcome::ExceededBudget,
            "target_lost" => EpisodeOutcome::TargetLost,
            _ => return Err(err(4, "unknown outcome")),
        };
        out.push(EpisodeRecord {
            case: cols[0].into(),
            run: num(1)? as usize,
            seed: num(2)?,
            scene_hash: cols[3].into(),
            outcome,
            motions: num(5)? as usize,
            pushes: num(6)? as usize,
            grasps: num(7)? as usize,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub metrics: Metrics,
    pub records: Vec<EpisodeRecord>,
    /// Step logs per episode, in record order.
    pub steps: Vec<Vec<StepLog>>,
}

impl BenchResult {
    pub fn metrics_json(&self) -> String {
        serde_json::to_string_pretty(&self.metrics).expect("metrics serialize") + "\n"
    }

    pub fn steps_jsonl(&self) -> String {
        let mut s = String::new();
        for (r, steps) in self.records.iter().zip(&self.steps) {
            for st in steps {
                let row = serde_json::json!({ "case": r.case, "run": r.run, "step": st });
                s.push_str(&row.to_string());
                s.push('\n');
            }
        }
        s
    }

    /// Write `metrics.json`, `episodes.csv` and `steps.jsonl` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("metrics.json"), self.metrics_json())?;
        fs::write(dir.join("episodes.csv"), records_to_csv(&self.records))?;
        fs::write(dir.join("steps.jsonl"), self.steps_jsonl())?;
        Ok(())
    }
}

struct Job {
    case: String,
    run: usize,
    seed: u64,
    scene: Scene,
}

fn jobs(cfg: &BenchConfig) -> Result<Vec<Job>> {
    let mut out = Vec::new();
    let mut push_case = |case_idx: usize, case: String, make: &dyn Fn(u64) -> Result<Scene>| -> Result<()> {
        for run in 0..cfg.runs_per_case {
            let seed = derive(derive(cfg.seed, case_idx as u64), run as u64);
            out.push(Job {
                case: case.clone(),
                run,
                seed,
                scene: make(seed)?,
            });
        }
        Ok(())
    };
    if cfg.suite == Suite::Challenging {
        let dir = cfg.scenario_dir.clone().unwrap_or_else(default_scenario_dir);
        for (i, (name, scene)) in load_challenging_suite(dir)?.into_iter().enumerate() {
            push_case(i, name, &|_| Ok(scene.clone()))?;
        }
    } else {
        for &n in cfg.suite.block_counts() {
            push_case(n, format!("random_{n}"), &|seed| spawn_random_clutter(n, seed))?;
        }
    }
    Ok(out)
}

/// Run every episode of the suite, in parallel unless `threads == 1`.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let policy = cfg.policy();
    let jobs = jobs(cfg)?;
    let base = cfg.scorer.build(cfg.seed)?;
    let run = |job: &Job| -> Result<(EpisodeRecord, Vec<StepLog>)> {
        let evaluators = match cfg.scorer {
            ScorerChoice::Random => Evaluators::random(job.seed),
            _ => base.clone(),
        };
        let r = run_episode(&job.scene, &evaluators, &policy, job.seed)?;
        let pushes = r.log.iter().filter(|s| s.kind == crate::grid::ActionKind::Push).count();
        Ok((
            EpisodeRecord {
                case: job.case.clone(),
                run: job.run,
                seed: job.seed,
                scene_hash: job.scene.hash_hex(),
                outcome: r.outcome,
                motions: r.motions,
                pushes,
                grasps: r.motions - pushes,
            },
            r.log,
        ))
    };
    let results: Vec<Result<(EpisodeRecord, Vec<StepLog>)>> = if cfg.threads == 1 {
        jobs.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    };
    let mut records = Vec::with_capacity(results.len());
    let mut steps = Vec::with_capacity(results.len());
    for r in results {
        let (rec, log) = r?;
        records.push(rec);
        steps.push(log);
    }
    Ok(BenchResult {
        metrics: compute_metrics(cfg, &records),
        records,
        steps,
    })
}
