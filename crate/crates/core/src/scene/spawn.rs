use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Block, Pose, Scene, OVERLAP_TOL_M, WORKSPACE_M};
use crate::error::{Error, Result};
use crate::geometry::ConvexPolygon;

/// A target must show at least this many pixels when the episode starts.
pub const MIN_VISIBLE_TARGET_PX: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SpawnConfig {
    /// Radius (m) of the central drop disc.
    pub drop_radius_m: f64,
    pub height_mm: (f64, f64),
    pub max_attempts: usize,
}

impl Default for SpawnConfig {
    fn default() -> Self {
        Self {
            drop_radius_m: 0.15,
            height_mm: (30.0, 50.0),
            max_attempts: 1000,
        }
    }
}

fn random_block(rng: &mut ChaCha8Rng, id: u32, cfg: &SpawnConfig, pose: Pose) -> Block {
    let h = rng.gen_range(cfg.height_mm.0..=cfg.height_mm.1);
    let block = match rng.gen_range(0..4) {
        0 => Block::cuboid(id, rng.gen_range(0.020..=0.040), rng.gen_range(0.020..=0.050), h, pose),
        1 => Block::cylinder(id, rng.gen_range(0.010..=0.020), h, pose),
        2 => Block::triangular_prism(id, rng.gen_range(0.030..=0.045), h, pose),
        _ => Block::half_cylinder(id, rng.gen_range(0.015..=0.025), h, pose),
    };
    block.with_color(rng.gen_range(0..8))
}

/// Drop `n_blocks` random blocks one at a time into the central disc.
///
/// A block that lands on others rests on the highest one it overlaps; the
/// drop is rejected and re-sampled if its centroid is not above that support
/// or if the support is itself stacked. The target is drawn uniformly from
/// the blocks showing at least [`MIN_VISIBLE_TARGET_PX`] pixels.
pub fn spawn_random_clutter(n_blocks: usize, seed: u64) -> Result<Scene> {
    spawn_with(n_blocks, seed, &SpawnConfig::default())
}

pub fn spawn_with(n_blocks: usize, seed: u64, cfg: &SpawnConfig) -> Result<Scene> {
    if !(1..=30).contains(&n_blocks) {
        return Err(Error::InvalidArgument(format!(
            "block count {n_blocks} outside [1, 30]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks: Vec<Block> = Vec::with_capacity(n_blocks);
    let mut polys: Vec<ConvexPolygon> = Vec::with_capacity(n_blocks);
    let mut attempts = 0;
    let center = WORKSPACE_M / 2.0;
    while blocks.len() < n_blocks {
        attempts += 1;
        if attempts > cfg.max_attempts {
            return Err(Error::SpawnFailure { attempts: cfg.max_attempts });
        }
        let r = cfg.drop_radius_m * rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(0.0..2.0 * PI);
        let pose = Pose {
            x: center + r * phi.cos(),
            y: center + r * phi.sin(),
            yaw: rng.gen_range(0.0..2.0 * PI),
        };
        let mut block = random_block(&mut rng, blocks.len() as u32, cfg, pose);
        let poly = block.footprint();
        let support = polys
            .iter()
            .enumerate()
            .filter(|(_, p)| poly.penetration(p) > OVERLAP_TOL_M)
            .max_by_key(|(j, _)| (blocks[*j].top(), std::cmp::Reverse(*j)))
            .map(|(j, _)| j);
        if let Some(j) = support {
            let stable = blocks[j].base == 0 && polys[j].contains([block.pose.x, block.pose.y]);
            if !stable {
                continue;
            }
            block.base = blocks[j].top();
        }
        polys.push(poly);
        blocks.push(block);
    }

    let mut scene = Scene {
        blocks,
        target_id: 0,
        rng_seed: seed,
    };
    scene.settle();
    let hm = scene.render_heightmap();
    let eligible: Vec<u32> = scene
        .blocks
        .iter()
        .filter(|b| b.graspable)
        .filter(|b| {
            scene
                .visible_mask_of(b.id, &hm)
                .is_some_and(|m| m.count() >= MIN_VISIBLE_TARGET_PX)
        })
        .map(|b| b.id)
        .collect();
    if eligible.is_empty() {
        return Err(Error::SpawnFailure { attempts });
    }
    scene.target_id = eligible[rng.gen_range(0..eligible.len())];
    Ok(scene)
}
