//! Value labels from before/after scene pairs.
//!
//! A transition is effective when the target becomes markedly more visible
//! (at least 20% more visible pixels, or any pixels after none) or when the
//! ring around it empties by at least `τ_b` without the target losing more
//! than a tenth of its visible pixels. Grasps that pick the target are worth
//! 2, effective pushes and effective non-target picks 1, everything else 0.

use crate::error::{Error, Result};
use crate::scene::{GraspOutcome, Scene};

use super::features::BorderStats;

/// Required fractional drop in border occupancy.
pub const BORDER_DROP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub visible: usize,
    pub occupancy: usize,
}

pub fn observe(scene: &Scene) -> Result<Observation> {
    let tmask = scene.target_mask()?;
    let hm = scene.render_heightmap();
    Ok(Observation {
        visible: tmask.count(),
        occupancy: BorderStats::new(&hm, &tmask).occupancy,
    })
}

/// Visibility rule: `after ≥ 1.2 · before` in exact integer arithmetic; any
/// gain from zero counts.
pub fn visibility_improved(before: usize, after: usize) -> bool {
    if before == 0 {
        after > 0
    } else {
        5 * after >= 6 * before
    }
}

/// Crowding rule: occupancy falls to at most `(1 − τ_b)` of its value (and
/// strictly), while the target keeps at least 90% of its visible pixels.
pub fn crowding_reduced(before: Observation, after: Observation, tau: f64) -> bool {
    let ob = before.occupancy as f64;
    let oa = after.occupancy as f64;
    after.occupancy < before.occupancy
        && oa <= (1.0 - tau) * ob + 1e-9
        && 10 * after.visible >= 9 * before.visible
}

pub fn effective(before: Observation, after: Observation) -> bool {
    visibility_improved(before.visible, after.visible) || crowding_reduced(before, after, BORDER_DROP)
}

pub fn label_push(before: &Scene, after: &Scene, target_id: u32) -> Result<u8> {
    if before.target_id != target_id || after.target_id != target_id || !after.has_target() {
        return Err(Error::MissingTarget);
    }
    Ok(effective(observe(before)?, observe(after)?) as u8)
}

pub fn label_grasp(outcome: GraspOutcome, before: &Scene, after: &Scene, target_id: u32) -> u8 {
    match outcome {
        GraspOutcome::PickedTarget => 2,
        GraspOutcome::PickedNontarget(_) => match (observe(before), observe(after)) {
            (Ok(b), Ok(a)) if after.target_id == target_id => effective(b, a) as u8,
            _ => 0,
        },
        GraspOutcome::Empty | GraspOutcome::Collision => 0,
    }
}
