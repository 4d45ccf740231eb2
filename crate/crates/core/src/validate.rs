//! Invariant and oracle sweeps over seeded random scenes.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::generators::{generate_grasps, generate_pushes, GeneratorConfig};
use crate::grid::{rasterize_grasp, rasterize_push, ActionMask, Pixel, GRASP_ORIENTATIONS, GRID_SIZE, MAX_HEIGHT_TENTHS};
use crate::scene::{collision_oracle, finger_polygons_world, gripper_polygon_world, spawn_random_clutter, Scene};
use crate::seed::derive;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            violations: 0,
            first_violation: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.checked > 0
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} checked, {} violations",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checked,
            self.violations
        )?;
        if let Some(v) = &self.first_violation {
            write!(f, " (first: {v})")?;
        }
        Ok(())
    }
}

/// Random clutter of 10 to 20 blocks for scene `i` of a sweep.
pub fn sweep_scene(seed: u64, i: usize) -> Result<Scene> {
    let s = derive(seed, i as u64);
    spawn_random_clutter(10 + (s % 11) as usize, s)
}

/// Every generated grasp keeps its fingers clear of blocks above the descent
/// depth, and every push start footprint clears the push margin, judged by
/// the polygon oracle rather than the heightmap.
pub fn sct_soundness(scenes: usize, seed: u64) -> Result<Check> {
    let cfg = GeneratorConfig::default();
    let grasp_margin = (cfg.grasp_height_margin_mm * 10.0).round() as i32;
    let push_margin = (cfg.push_height_margin_mm * 10.0).round() as i32;
    let mut check = Check::new("sct_soundness");
    for i in 0..scenes {
        let scene = sweep_scene(seed, i)?;
        let hm = scene.render_heightmap();
        let tmask = scene.target_mask()?;
        if tmask.is_empty() {
            continue;
        }
        let gen_seed = derive(seed, 1 << 32 | i as u64);
        for g in or_empty(generate_grasps(&hm, &tmask, &cfg, gen_seed))? {
            let descent = hm.get(g.center) as i32 - grasp_margin;
            let hit = collision_oracle(&scene, &finger_polygons_world(g.center, g.orientation_idx), descent);
            check.record(!hit, || format!("scene {i} grasp {:?} k={}", g.center, g.orientation_idx));
        }
        let descent = hm.max_over(&tmask) as i32 - push_margin;
        for p in or_empty(generate_pushes(&hm, &tmask, &cfg, gen_seed))? {
            let hit = collision_oracle(&scene, &[gripper_polygon_world(p.start, p.angle)], descent);
            check.record(!hit, || format!("scene {i} push {:?} angle={}", p.start, p.angle));
        }
    }
    Ok(check)
}

fn or_empty<T>(r: Result<Vec<T>>) -> Result<Vec<T>> {
    match r {
        Err(Error::NoCandidates) => Ok(Vec::new()),
        other => other,
    }
}

/// Rasterized masks hold only their allowed values, in the 62×12 / 60×12
/// layout, compared cell by cell against a direct evaluation of the
/// rectangle at every pixel center.
pub fn mask_exactness(placements: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = Check::new("mask_exactness");
    for i in 0..placements {
        let p = Pixel::new(rng.gen_range(0..GRID_SIZE as i32), rng.gen_range(0..GRID_SIZE as i32));
        if i % 2 == 0 {
            let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let m = rasterize_push(p, angle);
            let (c, s) = (angle.cos(), angle.sin());
            let expect = |x: f64, y: f64| {
                let (dx, dy) = (x - p.x as f64, y - p.y as f64);
                let (u, v) = (dx * c + dy * s, -dx * s + dy * c);
                let inside = u >= -1e-9 && u < 62.0 - 1e-9 && v >= -6.0 - 1e-9 && v < 6.0 - 1e-9;
                match (inside, u < 31.0 - 1e-9) {
                    (false, _) => 0.0,
                    (true, true) => 0.5,
                    (true, false) => 1.0,
                }
            };
            compare_mask(&mut check, &m, expect, || format!("push {p:?} angle={angle}"));
        } else {
            let k = rng.gen_range(0..GRASP_ORIENTATIONS);
            let m = rasterize_grasp(p, k);
            let a = (k % 8) as f64 * std::f64::consts::PI / 8.0;
            let (c, s) = (a.cos(), a.sin());
            let expect = |x: f64, y: f64| {
                let (dx, dy) = (x - p.x as f64, y - p.y as f64);
                let (u, v) = (dx * c + dy * s, -dx * s + dy * c);
                let inside = u >= -30.0 - 1e-9 && u < 30.0 - 1e-9 && v >= -6.0 - 1e-9 && v < 6.0 - 1e-9;
                if inside {
                    1.0
                } else {
                    0.0
                }
            };
            compare_mask(&mut check, &m, expect, || format!("grasp {p:?} k={k}"));
        }
    }
    check
}

fn compare_mask(check: &mut Check, m: &ActionMask, expect: impl Fn(f64, f64) -> f32, what: impl FnOnce() -> String) {
    let dense = m.to_dense();
    let mut ok = true;
    for (i, &v) in dense.iter().enumerate() {
        let p = Pixel::from_index(i);
        if v != expect(p.x as f64 + 0.5, p.y as f64 + 0.5) {
            ok = false;
            break;
        }
    }
    check.record(ok, what);
}

/// Per-quadrant and off-target totals stay within the caps.
pub fn sampling_caps(invocations: usize, seed: u64) -> Result<Check> {
    let cfg = GeneratorConfig::default();
    let mut check = Check::new("sampling_caps");
    let mut i = 0;
    let mut scene_idx = 0;
    while i < invocations {
        let scene = sweep_scene(seed ^ 0xca95, scene_idx)?;
        scene_idx += 1;
        let hm = scene.render_heightmap();
        let tmask = scene.target_mask()?;
        if tmask.is_empty() {
            continue;
        }
        for rep in 0..5u64 {
            let s = derive(seed, (scene_idx as u64) << 8 | rep);
            let pushes = or_empty(generate_pushes(&hm, &tmask, &cfg, s))?;
            let grasps = or_empty(generate_grasps(&hm, &tmask, &cfg, s))?;
            let mut pq = [0usize; 4];
            pushes.iter().for_each(|p| pq[p.quadrant as usize] += 1);
            let mut gq = [0usize; 4];
            let off: Vec<_> = grasps.iter().filter(|g| !g.on_target).collect();
            off.iter().for_each(|g| gq[g.quadrant as usize] += 1);
            let ok = pq.iter().chain(&gq).all(|&n| n <= cfg.per_quadrant_cap)
                && pushes.len() <= cfg.total_cap
                && off.len() <= cfg.total_cap;
            check.record(ok, || format!("scene {scene_idx} rep {rep}: pushes {pq:?} grasps {gq:?}"));
            i += 2;
        }
    }
    Ok(check)
}

/// Heightmaps stay within range and the target mask is a subset of the target footprint.
pub fn scene_invariants(scenes: usize, seed: u64) -> Result<Check> {
    let mut check = Check::new("scene_invariants");
    for i in 0..scenes {
        let scene = sweep_scene(seed, i)?;
        let hm = scene.render_heightmap();
        let tmask = scene.target_mask()?;
        let target = scene.target().ok_or(Error::MissingTarget)?;
        let foot = crate::grid::BitMask::from_pixels(
            crate::scene::block_pixels(target).into_iter().map(Pixel::from_index),
        );
        let ok = hm.max() < MAX_HEIGHT_TENTHS
            && tmask.is_subset_of(&foot)
            && tmask.pixels().all(|p| hm.get(p) == target.top());
        check.record(ok, || format!("scene {i}"));
    }
    Ok(check)
}

pub fn run_all(scenes: usize, seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        scene_invariants(scenes, seed)?,
        sct_soundness(scenes, seed)?,
        mask_exactness(scenes, seed),
        sampling_caps(scenes, seed)?,
    ])
}
