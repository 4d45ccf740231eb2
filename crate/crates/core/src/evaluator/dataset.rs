//! Labeled transitions gathered by executing random generator candidates.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureVector};
use super::labels::{label_grasp, label_push};
use crate::error::{Error, Result};
use crate::generators::{self, ActionCandidate, GeneratorConfig, GeneratorKind};
use crate::grid::{read_action_mask, read_bitmask, read_heightmap, write_action_mask, write_bitmask, write_heightmap};
use crate::grid::{ActionKind, ActionMask, BitMask, Heightmap};
use crate::scene::{simulate_grasp, simulate_push, spawn_random_clutter, GraspOutcome, Scene};
use crate::seed::derive;

pub const GEGD_MAGIC: &[u8; 4] = b"GEGD";
pub const GEGD_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub heightmap: Heightmap,
    pub target_mask: BitMask,
    pub action_mask: ActionMask,
    pub kind: ActionKind,
    pub value: u8,
}

impl LabeledSample {
    pub fn features(&self) -> Result<FeatureVector> {
        extract_features(&self.heightmap, &self.target_mask, &self.action_mask)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Count of samples per value 0, 1, 2.
    pub fn histogram(&self) -> [usize; 3] {
        let mut h = [0; 3];
        for s in &self.samples {
            h[s.value as usize] += 1;
        }
        h
    }

    pub fn examples(&self) -> Result<Vec<Example>> {
        self.samples
            .iter()
            .map(|s| Ok(Example { features: s.features()?, value: s.value }))
            .collect()
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, self.samples.len())?;
        self.samples.iter().try_for_each(|s| write_record(w, s))
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut samples = Vec::new();
        read_records(r, |s| {
            samples.push(s);
            Ok(())
        })?;
        Ok(Self { samples })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(&mut BufReader::new(File::open(path)?))
    }
}

pub fn write_header<W: Write>(w: &mut W, count: usize) -> Result<()> {
    let count = u32::try_from(count).map_err(|_| Error::InvalidArgument("too many records".into()))?;
    w.write_all(GEGD_MAGIC)?;
    w.write_all(&GEGD_VERSION.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    Ok(())
}

pub fn write_record<W: Write>(w: &mut W, s: &LabeledSample) -> Result<()> {
    w.write_all(&[s.kind.code(), s.value])?;
    write_heightmap(w, &s.heightmap)?;
    write_bitmask(w, &s.target_mask)?;
    write_action_mask(w, &s.action_mask)
}

/// Streams records to `f` without holding the whole file; returns the count.
pub fn read_records<R: Read>(r: &mut R, mut f: impl FnMut(LabeledSample) -> Result<()>) -> Result<usize> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != GEGD_MAGIC {
        return Err(Error::Format("not a GEGD dataset".into()));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    if u16::from_le_bytes(b2) != GEGD_VERSION {
        return Err(Error::Format("unsupported GEGD version".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    for i in 0..n {
        let mut head = [0u8; 2];
        r.read_exact(&mut head)?;
        let kind =
            ActionKind::from_code(head[0]).ok_or_else(|| Error::Format(format!("record {i}: bad kind {}", head[0])))?;
        let value = head[1];
        if value > 2 || (value == 2 && kind == ActionKind::Push) {
            return Err(Error::Format(format!("record {i}: bad value {value}")));
        }
        f(LabeledSample {
            heightmap: read_heightmap(r)?,
            target_mask: read_bitmask(r)?,
            action_mask: read_action_mask(r, kind)?,
            kind,
            value,
        })?;
    }
    Ok(n)
}

/// Encoded examples of a GEGD file, read one record at a time.
pub fn load_examples(path: impl AsRef<Path>) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    read_records(&mut BufReader::new(File::open(path)?), |s| {
        out.push(Example {
            features: s.features()?,
            value: s.value,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Encoded features with their label.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectConfig {
    pub min_blocks: usize,
    pub max_blocks: usize,
    pub actions_per_scene: usize,
    pub generator: GeneratorConfig,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            min_blocks: 10,
            max_blocks: 20,
            actions_per_scene: 8,
            generator: GeneratorConfig::default(),
        }
    }
}

/// Result of executing one candidate.
#[derive(Debug, Clone)]
pub struct Transition {
    pub after: Scene,
    pub outcome: Option<GraspOutcome>,
}

pub fn execute(scene: &Scene, candidate: &ActionCandidate) -> Transition {
    match candidate {
        ActionCandidate::Push(p) => Transition {
            after: simulate_push(scene, p.start, p.angle),
            outcome: None,
        },
        ActionCandidate::Grasp(g) => {
            let (after, outcome) = simulate_grasp(scene, g.center, g.orientation_idx);
            Transition {
                after,
                outcome: Some(outcome),
            }
        }
    }
}

fn or_empty<T>(found: Result<Vec<T>>) -> Result<Vec<T>> {
    match found {
        Err(Error::NoCandidates) => Ok(Vec::new()),
        other => other,
    }
}

/// Candidates of one action kind; empty when the generator finds none.
pub fn kind_candidates(
    generator: GeneratorKind,
    kind: ActionKind,
    hm: &Heightmap,
    tmask: &BitMask,
    cfg: &GeneratorConfig,
    seed: u64,
) -> Result<Vec<ActionCandidate>> {
    match kind {
        ActionKind::Push => Ok(or_empty(generators::pushes(generator, hm, tmask, cfg, seed))?
            .into_iter()
            .map(ActionCandidate::Push)
            .collect()),
        ActionKind::Grasp => Ok(or_empty(generators::grasps(generator, hm, tmask, cfg, derive(seed, 1)))?
            .into_iter()
            .map(ActionCandidate::Grasp)
            .collect()),
    }
}

/// Both candidate lists for one step, pushes then grasps; either may be empty.
pub fn step_candidates(
    generator: GeneratorKind,
    hm: &Heightmap,
    tmask: &BitMask,
    cfg: &GeneratorConfig,
    seed: u64,
) -> Result<(Vec<ActionCandidate>, Vec<ActionCandidate>)> {
    Ok((
        kind_candidates(generator, ActionKind::Push, hm, tmask, cfg, seed)?,
        kind_candidates(generator, ActionKind::Grasp, hm, tmask, cfg, seed)?,
    ))
}

/// Stream labeled samples until `n` of each kind have been emitted.
///
/// Each step picks a kind uniformly among those still short of `n`, falling
/// back to the other when it has no candidates, then a uniform candidate of
/// that kind. The scene is respawned
/// after `actions_per_scene` actions, once the target is picked, pushed off
/// the table or fully hidden, or when no candidate remains. Pushes that evict
/// the target are not recorded.
pub fn collect_with(
    n: usize,
    seed: u64,
    cfg: &CollectConfig,
    mut sink: impl FnMut(LabeledSample) -> Result<()>,
) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    if cfg.min_blocks == 0 || cfg.min_blocks > cfg.max_blocks || cfg.actions_per_scene == 0 {
        return Err(Error::InvalidArgument("bad collection config".into()));
    }
    cfg.generator.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0usize; 2];
    let mut session = 0u64;
    while counts[0] < n || counts[1] < n {
        let blocks = rng.gen_range(cfg.min_blocks..=cfg.max_blocks);
        let mut scene = spawn_random_clutter(blocks, derive(seed, session))?;
        session += 1;
        for step in 0..cfg.actions_per_scene {
            let hm = scene.render_heightmap();
            let tmask = scene.target_mask()?;
            if tmask.is_empty() {
                break;
            }
            let gen_seed = derive(derive(seed, session), step as u64);
            let mut kinds: Vec<ActionKind> = [ActionKind::Push, ActionKind::Grasp]
                .into_iter()
                .filter(|&k| counts[(k == ActionKind::Grasp) as usize] < n)
                .collect();
            if kinds.len() == 2 && rng.gen_bool(0.5) {
                kinds.swap(0, 1);
            }
            let mut pool = Vec::new();
            for kind in kinds {
                pool = kind_candidates(GeneratorKind::Sct, kind, &hm, &tmask, &cfg.generator, gen_seed)?;
                if !pool.is_empty() {
                    break;
                }
            }
            if pool.is_empty() {
                break;
            }
            let candidate = &pool[rng.gen_range(0..pool.len())];
            let t = execute(&scene, candidate);
            let value = match t.outcome {
                None if !t.after.has_target() => break,
                None => label_push(&scene, &t.after, scene.target_id)?,
                Some(outcome) => label_grasp(outcome, &scene, &t.after, scene.target_id),
            };
            let kind = candidate.kind();
            counts[(kind == ActionKind::Grasp) as usize] += 1;
            sink(LabeledSample {
                heightmap: hm,
                target_mask: tmask,
                action_mask: candidate.mask().clone(),
                kind,
                value,
            })?;
            if t.outcome == Some(GraspOutcome::PickedTarget) {
                break;
            }
            scene = t.after;
        }
    }
    Ok(())
}

/// Collect `n` push samples and `n` grasp samples.
pub fn collect_dataset(n: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    collect_dataset_with(n, seed, &CollectConfig::default())
}

pub fn collect_dataset_with(n: usize, seed: u64, cfg: &CollectConfig) -> Result<(Dataset, Dataset)> {
    let (mut push, mut grasp) = (Dataset::default(), Dataset::default());
    collect_with(n, seed, cfg, |s| {
        match s.kind {
            ActionKind::Push => push.samples.push(s),
            ActionKind::Grasp => grasp.samples.push(s),
        }
        Ok(())
    })?;
    Ok((push, grasp))
}

/// Collect and encode in one pass without keeping the grids.
pub fn collect_examples(n: usize, seed: u64, cfg: &CollectConfig) -> Result<(Vec<Example>, Vec<Example>)> {
    let (mut push, mut grasp) = (Vec::with_capacity(n), Vec::with_capacity(n));
    collect_with(n, seed, cfg, |s| {
        let e = Example {
            features: s.features()?,
            value: s.value,
        };
        match s.kind {
            ActionKind::Push => push.push(e),
            ActionKind::Grasp => grasp.push(e),
        }
        Ok(())
    })?;
    Ok((push, grasp))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collects_equal_sizes_deterministically() {
        let (p1, g1) = collect_dataset(10, 5).unwrap();
        assert_eq!((p1.len(), g1.len()), (10, 10));
        assert!(p1.samples.iter().all(|s| s.kind == ActionKind::Push && s.value <= 1));
        assert!(g1.samples.iter().all(|s| s.kind == ActionKind::Grasp));
        let (p2, g2) = collect_dataset(10, 5).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        g1.write(&mut a).unwrap();
        g2.write(&mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(p1, p2);
    }

    #[test]
    fn gegd_round_trip() {
        let (p, g) = collect_dataset(3, 9).unwrap();
        for d in [p, g] {
            let mut buf = Vec::new();
            d.write(&mut buf).unwrap();
            assert_eq!(&buf[..4], b"GEGD");
            assert_eq!(Dataset::read(&mut buf.as_slice()).unwrap(), d);
        }
        assert!(Dataset::read(&mut &b"GEGX\x01\x00"[..]).is_err());
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(collect_dataset(0, 1).is_err());
    }

    #[test]
    fn examples_match_samples() {
        let cfg = CollectConfig::default();
        let (p, g) = collect_dataset_with(4, 2, &cfg).unwrap();
        let (pe, ge) = collect_examples(4, 2, &cfg).unwrap();
        assert_eq!(p.examples().unwrap(), pe);
        assert_eq!(g.examples().unwrap(), ge);
    }
}
