//! Conditional greedy action selection and the episode loop.
//!
//! Each step renders the scene, checks the override rules in priority order
//! (exploration, edge recovery, forced push) and otherwise scores generator
//! candidates and executes the best grasp if its score clears the threshold,
//! else the best action of either kind.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::dataset::{execute, kind_candidates};
use crate::evaluator::labels::{label_grasp, label_push};
use crate::evaluator::{BorderStats, Evaluators, FeatureContext};
use crate::generators::{ActionCandidate, GeneratorConfig, GeneratorKind};
use crate::grid::{ActionKind, BitMask, Heightmap, Pixel, GRID_SIZE, GRIPPER_WIDTH_PX, ROI_HALF_EXTENT};
use crate::scene::{GraspOutcome, Scene};
use crate::seed::derive;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Five motions per episode.
    Sim,
    /// Fifteen motions per episode, for targets that start hidden.
    RealWorld,
}

impl Profile {
    pub fn max_motions(self) -> usize {
        match self {
            Profile::Sim => 5,
            Profile::RealWorld => 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub grasp_threshold: f64,
    pub max_motions: usize,
    pub consecutive_grasp_fail_limit: usize,
    pub edge_margin_px: i32,
    pub exploratory_push_enabled: bool,
    /// Off for the grasp-only variant: no pushes of any origin.
    pub pushing_enabled: bool,
    pub generator: GeneratorKind,
    pub generator_config: GeneratorConfig,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            grasp_threshold: 1.0,
            max_motions: Profile::Sim.max_motions(),
            consecutive_grasp_fail_limit: 2,
            edge_margin_px: 10,
            exploratory_push_enabled: true,
            pushing_enabled: true,
            generator: GeneratorKind::Sct,
            generator_config: GeneratorConfig::default(),
        }
    }
}

impl PolicyConfig {
    pub fn with_profile(profile: Profile) -> Self {
        Self {
            max_motions: profile.max_motions(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grasp_threshold > 0.0 && self.grasp_threshold.is_finite()) {
            return Err(Error::InvalidArgument("grasp_threshold must be positive".into()));
        }
        if self.max_motions == 0 {
            return Err(Error::InvalidArgument("max_motions must be at least 1".into()));
        }
        if self.edge_margin_px < 0 {
            return Err(Error::InvalidArgument("edge_margin_px must be non-negative".into()));
        }
        self.generator_config.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub candidate: ActionCandidate,
    pub score: f64,
}

/// Strict preference: higher score, then grasp before push, then lower pixel
/// index, then lower angle or orientation.
pub fn preference(a: &Scored, b: &Scored) -> Ordering {
    let kind_rank = |s: &Scored| (s.candidate.kind() == ActionKind::Push) as u8;
    b.score
        .total_cmp(&a.score)
        .then(kind_rank(a).cmp(&kind_rank(b)))
        .then(pixel_key(&a.candidate).cmp(&pixel_key(&b.candidate)))
        .then(a.candidate.parameter().total_cmp(&b.candidate.parameter()))
}

fn pixel_key(c: &ActionCandidate) -> (i32, i32) {
    let p = c.pixel();
    (p.y, p.x)
}

fn best(list: &[Scored]) -> Option<&Scored> {
    list.iter().min_by(|a, b| preference(a, b))
}

/// The best grasp when its score exceeds `threshold`, else the best of both lists.
pub fn select_action<'a>(pushes: &'a [Scored], grasps: &'a [Scored], threshold: f64) -> Result<&'a Scored> {
    let g = best(grasps);
    if let Some(g) = g.filter(|g| g.score > threshold) {
        return Ok(g);
    }
    match (best(pushes), g) {
        (Some(p), Some(g)) => Ok(if preference(g, p) == Ordering::Greater { p } else { g }),
        (Some(p), None) => Ok(p),
        (None, Some(g)) => Ok(g),
        (None, None) => Err(Error::NoActions),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSource {
    Scored,
    Exploration,
    EdgeRecovery,
    ForcedPush,
    Fallback,
}

impl ActionSource {
    pub fn name(self) -> &'static str {
        match self {
            ActionSource::Scored => "scored",
            ActionSource::Exploration => "exploration",
            ActionSource::EdgeRecovery => "edge_recovery",
            ActionSource::ForcedPush => "forced_push",
            ActionSource::Fallback => "fallback",
        }
    }
}

/// Horizontal push whose route runs across the highest pixel of the heightmap.
pub fn exploratory_push(hm: &Heightmap) -> ActionCandidate {
    let top = hm.argmax();
    let back = 2 * GRIPPER_WIDTH_PX as i32 + 6;
    if top.x >= back {
        ActionCandidate::push(Pixel::new(top.x - back, top.y), 0.0)
    } else {
        ActionCandidate::push(Pixel::new(top.x + back + 1, top.y + 1), PI)
    }
}

/// Push that starts behind the target, as seen from the workspace center,
/// and drives it toward the center.
pub fn edge_recovery_push(tmask: &BitMask) -> Result<ActionCandidate> {
    let (cx, cy) = tmask.centroid_f64().ok_or(Error::EmptyMask)?;
    let mid = GRID_SIZE as f64 / 2.0;
    let angle = (mid - cy).atan2(mid - cx);
    let (dx, dy) = (angle.cos(), angle.sin());
    let reach = tmask
        .pixels()
        .map(|p| -((p.x as f64 + 0.5 - cx) * dx + (p.y as f64 + 0.5 - cy) * dy))
        .fold(0.0f64, f64::max);
    let back = reach + GRIPPER_WIDTH_PX + 2.0;
    let start = Pixel::new((cx - back * dx).floor() as i32, (cy - back * dy).floor() as i32);
    Ok(ActionCandidate::push(start, angle))
}

/// Push from the ROI boundary through the target centroid, approaching from
/// the first of left, right, above, below whose start lies on the grid.
pub fn fallback_push(tmask: &BitMask) -> Result<ActionCandidate> {
    let c = tmask.centroid()?;
    let r = ROI_HALF_EXTENT;
    let options = [
        (Pixel::new(c.x - r, c.y), 0.0),
        (Pixel::new(c.x + r, c.y), PI),
        (Pixel::new(c.x, c.y - r), PI / 2.0),
        (Pixel::new(c.x, c.y + r), -PI / 2.0),
    ];
    let (start, angle) = options.into_iter().find(|(p, _)| p.in_bounds()).unwrap_or(options[0]);
    Ok(ActionCandidate::push(start, angle))
}

/// Stand-in grasp when no scored action exists: straight down on the target
/// centroid, or on the highest pixel when the target is hidden.
pub fn fallback_grasp(hm: &Heightmap, tmask: &BitMask) -> ActionCandidate {
    match tmask.centroid() {
        Ok(c) => ActionCandidate::grasp(c, 0, tmask.get(c)),
        Err(_) => ActionCandidate::grasp(hm.argmax(), 0, false),
    }
}

/// Override rules in priority order; `None` lets scored selection decide.
/// The forced push is returned as a marker and resolved by the caller, which
/// owns the scored push list.
pub fn deterministic_override(
    consecutive_grasp_failures: usize,
    hm: &Heightmap,
    tmask: &BitMask,
    cfg: &PolicyConfig,
) -> Option<(ActionSource, Option<ActionCandidate>)> {
    if !cfg.pushing_enabled {
        return None;
    }
    if tmask.is_empty() {
        return cfg
            .exploratory_push_enabled
            .then(|| (ActionSource::Exploration, Some(exploratory_push(hm))));
    }
    if tmask.touches_border(cfg.edge_margin_px) {
        return edge_recovery_push(tmask).ok().map(|c| (ActionSource::EdgeRecovery, Some(c)));
    }
    if consecutive_grasp_failures >= cfg.consecutive_grasp_fail_limit {
        return Some((ActionSource::ForcedPush, None));
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeOutcome {
    Success,
    ExceededBudget,
    TargetLost,
}

impl EpisodeOutcome {
    pub fn name(self) -> &'static str {
        match self {
            EpisodeOutcome::Success => "success",
            EpisodeOutcome::ExceededBudget => "exceeded_budget",
            EpisodeOutcome::TargetLost => "target_lost",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub kind: ActionKind,
    pub source: ActionSource,
    pub x: i32,
    pub y: i32,
    /// Push angle in radians or grasp orientation index.
    pub param: f64,
    pub score: Option<f64>,
    pub outcome: Option<GraspOutcome>,
    pub label: u8,
    pub visible_px: usize,
    pub border_occupancy: usize,
    pub n_pushes: usize,
    pub n_grasps: usize,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub outcome: EpisodeOutcome,
    pub motions: usize,
    pub log: Vec<StepLog>,
    pub final_scene: Scene,
}

impl EpisodeResult {
    /// One JSON object per line.
    pub fn write_log<W: Write>(&self, w: &mut W) -> Result<()> {
        for s in &self.log {
            serde_json::to_writer(&mut *w, s)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

fn scored(list: Vec<ActionCandidate>, scores: Vec<f64>) -> Vec<Scored> {
    list.into_iter()
        .zip(scores)
        .map(|(candidate, score)| Scored { candidate, score })
        .collect()
}

/// Candidate lists of one step, scored.
pub fn score_step(
    evaluators: &Evaluators,
    hm: &Heightmap,
    tmask: &BitMask,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<(Vec<Scored>, Vec<Scored>)> {
    let ctx = FeatureContext::new(hm, tmask)?;
    let mut lists = Vec::with_capacity(2);
    for kind in [ActionKind::Push, ActionKind::Grasp] {
        if kind == ActionKind::Push && !cfg.pushing_enabled {
            lists.push(Vec::new());
            continue;
        }
        let cands = kind_candidates(cfg.generator, kind, hm, tmask, &cfg.generator_config, seed)?;
        let scorer = evaluators.for_kind(kind);
        let scores = cands.iter().map(|c| scorer.score(&ctx.encode(hm, tmask, c.mask()))).collect();
        lists.push(scored(cands, scores));
    }
    let grasps = lists.pop().unwrap_or_default();
    let pushes = lists.pop().unwrap_or_default();
    Ok((pushes, grasps))
}

fn choose(
    evaluators: &Evaluators,
    hm: &Heightmap,
    tmask: &BitMask,
    cfg: &PolicyConfig,
    seed: u64,
    forced: bool,
    counts: &mut (usize, usize),
) -> Result<(ActionSource, ActionCandidate, Option<f64>)> {
    if tmask.is_empty() {
        return Ok((ActionSource::Fallback, fallback_grasp(hm, tmask), None));
    }
    let (pushes, grasps) = score_step(evaluators, hm, tmask, cfg, seed)?;
    *counts = (pushes.len(), grasps.len());
    let pick = if forced {
        best(&pushes).map(|p| (ActionSource::ForcedPush, p))
    } else {
        select_action(&pushes, &grasps, cfg.grasp_threshold)
            .ok()
            .map(|s| (ActionSource::Scored, s))
    };
    Ok(match pick {
        Some((src, s)) => (src, s.candidate.clone(), Some(s.score)),
        None if cfg.pushing_enabled => (ActionSource::Fallback, fallback_push(tmask)?, None),
        None => (ActionSource::Fallback, fallback_grasp(hm, tmask), None),
    })
}

/// Run one episode to success, budget exhaustion or loss of the target.
pub fn run_episode(scene: &Scene, evaluators: &Evaluators, cfg: &PolicyConfig, seed: u64) -> Result<EpisodeResult> {
    cfg.validate()?;
    if !scene.has_target() {
        return Err(Error::MissingTarget);
    }
    let mut scene = scene.clone();
    let mut log = Vec::new();
    let mut failures = 0usize;
    let mut outcome = EpisodeOutcome::ExceededBudget;
    for step in 0..cfg.max_motions {
        let hm = scene.render_heightmap();
        let tmask = scene.target_mask()?;
        let stats = BorderStats::new(&hm, &tmask);
        let step_seed = derive(seed, step as u64);

        let mut counts = (0, 0);
        let (source, candidate, score) = match deterministic_override(failures, &hm, &tmask, cfg) {
            Some((src, Some(c))) => (src, c, None),
            Some((_, None)) => choose(evaluators, &hm, &tmask, cfg, step_seed, true, &mut counts)?,
            None => choose(evaluators, &hm, &tmask, cfg, step_seed, false, &mut counts)?,
        };

        let t = execute(&scene, &candidate);
        let label = match t.outcome {
            None if !t.after.has_target() => 0,
            None if tmask.is_empty() => 0,
            None => label_push(&scene, &t.after, scene.target_id)?,
            Some(o) if tmask.is_empty() => (o == GraspOutcome::PickedTarget) as u8 * 2,
            Some(o) => label_grasp(o, &scene, &t.after, scene.target_id),
        };
        match t.outcome {
            Some(o) if o.is_failure() => failures += 1,
            _ => failures = 0,
        }
        log.push(StepLog {
            step: step + 1,
            kind: candidate.kind(),
            source,
            x: candidate.pixel().x,
            y: candidate.pixel().y,
            param: candidate.parameter(),
            score,
            outcome: t.outcome,
            label,
            visible_px: tmask.count(),
            border_occupancy: stats.occupancy,
            n_pushes: counts.0,
            n_grasps: counts.1,
        });
        scene = t.after;
        if t.outcome == Some(GraspOutcome::PickedTarget) {
            outcome = EpisodeOutcome::Success;
            break;
        }
        if !scene.has_target() {
            outcome = EpisodeOutcome::TargetLost;
            break;
        }
    }
    Ok(EpisodeResult {
        outcome,
        motions: log.len(),
        log,
        final_scene: scene,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{px_cuboid, Block};

    fn grasp(x: i32, y: i32, k: u8, score: f64) -> Scored {
        Scored { candidate: ActionCandidate::grasp(Pixel::new(x, y), k, false), score }
    }

    fn push(x: i32, y: i32, a: f64, score: f64) -> Scored {
        Scored { candidate: ActionCandidate::push(Pixel::new(x, y), a), score }
    }

    fn sc(blocks: Vec<Block>, target: u32) -> Scene {
        Scene::dropped(blocks, target, 0).unwrap()
    }

    #[test]
    fn conditional_greedy_examples() {
        let g = vec![grasp(10, 10, 0, 1.4), grasp(11, 10, 0, 0.2)];
        let p = vec![push(5, 5, 0.0, 1.9)];
        assert_eq!(select_action(&p, &g, 1.0).unwrap().score, 1.4);
        let g = vec![grasp(10, 10, 0, 0.6)];
        let p = vec![push(5, 5, 0.0, 0.9)];
        assert_eq!(select_action(&p, &g, 1.0).unwrap().score, 0.9);
        assert_eq!(select_action(&p, &[], 1.0).unwrap().score, 0.9);
        assert!(matches!(select_action(&[], &[], 1.0), Err(Error::NoActions)));
        // exactly at the threshold is not enough
        let g = vec![grasp(10, 10, 0, 1.0)];
        let p = vec![push(5, 5, 0.0, 1.2)];
        assert_eq!(select_action(&p, &g, 1.0).unwrap().candidate.kind(), ActionKind::Push);
    }

    #[test]
    fn ties_follow_total_order() {
        let g = vec![grasp(10, 10, 3, 0.5), grasp(10, 10, 1, 0.5), grasp(9, 12, 0, 0.5)];
        let p = vec![push(0, 0, 0.0, 0.5)];
        let s = select_action(&p, &g, 1.0).unwrap();
        assert_eq!((s.candidate.pixel(), s.candidate.parameter()), (Pixel::new(10, 10), 1.0));
        let p = vec![push(3, 4, 0.5, 0.7), push(3, 4, -0.5, 0.7), push(2, 4, 1.0, 0.7)];
        let s = select_action(&p, &[], 1.0).unwrap();
        assert_eq!((s.candidate.pixel(), s.candidate.parameter()), (Pixel::new(2, 4), 1.0));
        let p = vec![push(3, 4, 0.5, 0.7), push(3, 4, -0.5, 0.7)];
        assert_eq!(select_action(&p, &[], 1.0).unwrap().candidate.parameter(), -0.5);
    }

    #[test]
    fn argmax_is_scale_invariant() {
        let g = vec![grasp(10, 10, 3, 0.3), grasp(40, 10, 1, 0.8), grasp(9, 12, 0, 0.5)];
        let p = vec![push(0, 0, 0.0, 0.1), push(7, 0, 0.0, 0.4)];
        for c in [0.01, 0.5, 3.0, 100.0] {
            let scale = |l: &[Scored]| l.iter().map(|s| Scored { score: s.score * c, ..s.clone() }).collect::<Vec<_>>();
            assert_eq!(best(&scale(&g)).unwrap().candidate, best(&g).unwrap().candidate);
            assert_eq!(best(&scale(&p)).unwrap().candidate, best(&p).unwrap().candidate);
        }
    }

    #[test]
    fn isolated_target_takes_one_motion() {
        let s = sc(vec![px_cuboid(1, 105, 105, 14, 14, 40.0)], 1);
        let r = run_episode(&s, &Evaluators::heuristic(), &PolicyConfig::default(), 3).unwrap();
        assert_eq!(r.outcome, EpisodeOutcome::Success);
        assert_eq!(r.motions, 1);
        assert_eq!(r.log[0].outcome, Some(GraspOutcome::PickedTarget));
        assert_eq!(r.log[0].label, 2);
    }

    #[test]
    fn covered_target_within_three_motions() {
        let s = sc(
            vec![px_cuboid(1, 100, 100, 20, 20, 30.0), px_cuboid(2, 104, 95, 10, 30, 20.0)],
            1,
        );
        assert!(s.target_mask().unwrap().count() < 400);
        let r = run_episode(&s, &Evaluators::heuristic(), &PolicyConfig::default(), 3).unwrap();
        assert_eq!(r.outcome, EpisodeOutcome::Success, "{:?}", r.log);
        assert!(r.motions <= 3);
    }

    #[test]
    fn budget_of_one_on_ungraspable_target() {
        let s = sc(vec![px_cuboid(1, 105, 105, 14, 14, 40.0).with_graspable(false)], 1);
        let cfg = PolicyConfig { max_motions: 1, ..Default::default() };
        let r = run_episode(&s, &Evaluators::heuristic(), &cfg, 0).unwrap();
        assert_eq!(r.outcome, EpisodeOutcome::ExceededBudget);
        assert_eq!(r.motions, 1);
    }

    #[test]
    fn edge_target_is_pushed_inward() {
        let s = sc(vec![px_cuboid(1, 0, 100, 10, 14, 40.0)], 1);
        let hm = s.render_heightmap();
        let t = s.target_mask().unwrap();
        let cfg = PolicyConfig::default();
        let (src, c) = deterministic_override(0, &hm, &t, &cfg).unwrap();
        assert_eq!(src, ActionSource::EdgeRecovery);
        let c = c.unwrap();
        assert_eq!(c.kind(), ActionKind::Push);
        assert!(c.parameter().cos() > 0.99);
        let after = execute(&s, &c).after;
        let before_x = s.target().unwrap().pose.x;
        assert!(after.target().unwrap().pose.x > before_x + 0.05);
    }

    #[test]
    fn two_failures_force_a_push() {
        let s = sc(vec![px_cuboid(1, 105, 105, 14, 14, 40.0), px_cuboid(2, 60, 60, 10, 10, 30.0)], 1);
        let hm = s.render_heightmap();
        let t = s.target_mask().unwrap();
        let cfg = PolicyConfig::default();
        assert!(deterministic_override(1, &hm, &t, &cfg).is_none());
        assert_eq!(deterministic_override(2, &hm, &t, &cfg), Some((ActionSource::ForcedPush, None)));
        let mut counts = (0, 0);
        let (src, c, _) = choose(&Evaluators::heuristic(), &hm, &t, &cfg, 0, true, &mut counts).unwrap();
        assert_eq!((src, c.kind()), (ActionSource::ForcedPush, ActionKind::Push));
    }

    #[test]
    fn hidden_target_explores_toward_highest_clutter() {
        let mut hm = Heightmap::zeros();
        hm.set(Pixel::new(150, 80), 900);
        hm.set(Pixel::new(60, 60), 300);
        let cfg = PolicyConfig::default();
        let (src, c) = deterministic_override(0, &hm, &BitMask::empty(), &cfg).unwrap();
        assert_eq!(src, ActionSource::Exploration);
        assert!(c.unwrap().mask().get(Pixel::new(150, 80)) > 0.0);
        let c = exploratory_push(&{
            let mut h = Heightmap::zeros();
            h.set(Pixel::new(5, 40), 900);
            h
        });
        assert!(c.mask().get(Pixel::new(5, 40)) > 0.0);
        let off = PolicyConfig { exploratory_push_enabled: false, ..Default::default() };
        assert!(deterministic_override(0, &hm, &BitMask::empty(), &off).is_none());
    }

    #[test]
    fn episodes_are_deterministic_and_bounded() {
        for seed in 0..4 {
            let s = crate::scene::spawn_random_clutter(15, seed).unwrap();
            let a = run_episode(&s, &Evaluators::heuristic(), &PolicyConfig::default(), seed).unwrap();
            let b = run_episode(&s, &Evaluators::heuristic(), &PolicyConfig::default(), seed).unwrap();
            assert_eq!(a.log, b.log);
            assert!(a.motions <= 5);
            if a.outcome == EpisodeOutcome::Success {
                let last = a.log.last().unwrap();
                assert_eq!((last.kind, last.outcome), (ActionKind::Grasp, Some(GraspOutcome::PickedTarget)));
            }
        }
    }
}
