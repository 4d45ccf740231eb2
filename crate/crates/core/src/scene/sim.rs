use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{block_pixels, rect_to_world, Scene, OVERLAP_TOL_M, WORKSPACE_M};
use crate::geometry::ConvexPolygon;
use crate::grid::{
    push_start_footprint, GraspZones, Pixel, RotatedRect, CELL_SIZE_M, GRID_SIZE, PUSH_TRAVEL_PX,
};

/// Longest chain of block-to-block contacts followed during a push.
pub const MAX_CHAIN_DEPTH: usize = 5;
/// A stacked block is left behind once its support moves this far (m).
pub const SUPPORT_LOSS_M: f64 = 0.02;
/// Fingers descend this far (tenths of mm) below the central-zone maximum.
pub const FINGER_DESCENT_MARGIN_TENTHS: i32 = 250;
/// Range of cross-section thickness (px, along the closing axis) the jaw can hold.
pub const CLOSING_MIN_PX: f64 = 6.0;
pub const CLOSING_MAX_PX: f64 = 36.0;

const CONTACT_EPS: f64 = 1e-9;
const MAX_CHAIN_STEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id")]
pub enum GraspOutcome {
    PickedTarget,
    PickedNontarget(u32),
    Empty,
    Collision,
}

impl GraspOutcome {
    pub fn is_failure(self) -> bool {
        matches!(self, GraspOutcome::Empty | GraspOutcome::Collision)
    }

    pub fn name(self) -> &'static str {
        match self {
            GraspOutcome::PickedTarget => "picked_target",
            GraspOutcome::PickedNontarget(_) => "picked_nontarget",
            GraspOutcome::Empty => "empty",
            GraspOutcome::Collision => "collision",
        }
    }
}

/// World footprint of the closed gripper at the start of a push.
pub fn gripper_polygon_world(start: Pixel, angle: f64) -> ConvexPolygon {
    rect_to_world(&push_start_footprint(start, angle))
}

/// World footprints of the two finger zones of a grasp.
pub fn finger_polygons_world(center: Pixel, orientation_idx: u8) -> [ConvexPolygon; 2] {
    let z = GraspZones::new(center, orientation_idx);
    [rect_to_world(&z.finger_a), rect_to_world(&z.finger_b)]
}

fn zone_max(hm_cells: &[u16], rect: &RotatedRect) -> u16 {
    rect.clipped_spans()
        .iter()
        .flat_map(|s| {
            let row = s.y as usize * GRID_SIZE;
            hm_cells[row + s.x0 as usize..row + s.x1 as usize].iter().copied()
        })
        .max()
        .unwrap_or(0)
}

/// Quasi-static push. The closed gripper rests at the highest surface under
/// its start footprint and travels [`PUSH_TRAVEL_PX`] along `angle`. Table
/// blocks it meets slide ahead of it and shove other table blocks in turn;
/// stacked blocks ride along unless their support slides [`SUPPORT_LOSS_M`]
/// or more, in which case they drop where they are. Blocks whose centroid
/// leaves the workspace are removed.
pub fn simulate_push(scene: &Scene, start: Pixel, angle: f64) -> Scene {
    let hm = scene.render_heightmap();
    let z_bottom = zone_max(hm.cells(), &push_start_footprint(start, angle));
    let dir = [angle.cos(), angle.sin()];
    let travel = PUSH_TRAVEL_PX * CELL_SIZE_M;
    let gripper = gripper_polygon_world(start, angle);

    let polys: Vec<ConvexPolygon> = scene.blocks.iter().map(|b| b.footprint()).collect();
    let n = polys.len();
    let table: Vec<bool> = scene.blocks.iter().map(|b| b.base == 0).collect();
    let mut disp = vec![0.0f64; n];
    let mut queue = VecDeque::new();

    for i in 0..n {
        if !table[i] || scene.blocks[i].top() <= z_bottom {
            continue;
        }
        if let Some((s0, s1)) = gripper.sweep_contact(dir, &polys[i]) {
            if s0 < travel - CONTACT_EPS && s1 > CONTACT_EPS {
                disp[i] = travel - s0.max(0.0);
                queue.push_back((i, 1usize));
            }
        }
    }

    let mut steps = 0;
    while let Some((a, depth)) = queue.pop_front() {
        steps += 1;
        if steps > MAX_CHAIN_STEPS || depth > MAX_CHAIN_DEPTH {
            continue;
        }
        let d = disp[a];
        for c in 0..n {
            if c == a || !table[c] {
                continue;
            }
            let Some((s0, s1)) = polys[a].sweep_contact(dir, &polys[c]) else {
                continue;
            };
            if s1 <= CONTACT_EPS || s0 >= d - disp[c] - CONTACT_EPS {
                continue;
            }
            // touching neighbours start with a sliver of overlap; treat as contact
            let need = d - s0.max(0.0);
            if need > disp[c] + CONTACT_EPS && depth < MAX_CHAIN_DEPTH {
                disp[c] = need;
                queue.push_back((c, depth + 1));
            }
        }
    }

    // Stacked blocks follow their primary support, visited lowest first.
    let mut order: Vec<usize> = (0..n).filter(|&i| !table[i]).collect();
    order.sort_by_key(|&i| (scene.blocks[i].base, i));
    for i in order {
        let base = scene.blocks[i].base;
        let support = (0..n)
            .filter(|&j| j != i && scene.blocks[j].top() == base)
            .filter(|&j| polys[i].penetration(&polys[j]) > OVERLAP_TOL_M)
            .min_by_key(|&j| scene.blocks[j].id);
        if let Some(j) = support {
            if disp[j] < SUPPORT_LOSS_M {
                disp[i] = disp[j];
            }
        }
    }

    let mut out = scene.clone();
    for (b, d) in out.blocks.iter_mut().zip(&disp) {
        b.pose.x += d * dir[0];
        b.pose.y += d * dir[1];
    }
    out.blocks.retain(|b| {
        (0.0..=WORKSPACE_M).contains(&b.pose.x) && (0.0..=WORKSPACE_M).contains(&b.pose.y)
    });
    out.settle();
    out
}

/// Top-down grasp. Fingers descend at both ends of the opening to
/// `h_center − 25 mm`, where `h_center` is the highest surface in the central
/// zone. Any surface above that depth under a finger is a collision.
/// Otherwise the jaw closes on the block nearest the center that reaches
/// `h_center` and whose cross-section inside the gap is 6 to 36 px thick.
pub fn simulate_grasp(scene: &Scene, center: Pixel, orientation_idx: u8) -> (Scene, GraspOutcome) {
    let hm = scene.render_heightmap();
    let zones = GraspZones::new(center, orientation_idx);
    let cells = hm.cells();
    let h_center = zone_max(cells, &zones.central) as i32;
    let descent = h_center - FINGER_DESCENT_MARGIN_TENTHS;
    let finger = zone_max(cells, &zones.finger_a).max(zone_max(cells, &zones.finger_b)) as i32;
    if finger > 0 && finger > descent {
        return (scene.clone(), GraspOutcome::Collision);
    }
    if h_center == 0 {
        return (scene.clone(), GraspOutcome::Empty);
    }

    let gap = zones.gap;
    let mut best: Option<(f64, u32, usize)> = None;
    for (i, b) in scene.blocks.iter().enumerate() {
        if (b.top() as i32) < h_center {
            continue;
        }
        let mut umin = f64::INFINITY;
        let mut umax = f64::NEG_INFINITY;
        let mut usum = 0.0;
        let mut count = 0usize;
        for idx in block_pixels(b) {
            let p = Pixel::from_index(idx);
            if !gap.contains_pixel(p.x, p.y) {
                continue;
            }
            let (u, _) = gap.to_local(p.x as f64 + 0.5, p.y as f64 + 0.5);
            umin = umin.min(u);
            umax = umax.max(u);
            usum += u;
            count += 1;
        }
        if count == 0 {
            continue;
        }
        let thickness = umax - umin + 1.0;
        if !(CLOSING_MIN_PX..=CLOSING_MAX_PX).contains(&thickness) {
            continue;
        }
        let offset = (usum / count as f64).abs();
        let better = match best {
            None => true,
            Some((o, id, _)) => offset < o - 1e-12 || ((offset - o).abs() <= 1e-12 && b.id < id),
        };
        if better {
            best = Some((offset, b.id, i));
        }
    }

    let Some((_, id, i)) = best else {
        return (scene.clone(), GraspOutcome::Empty);
    };
    if !scene.blocks[i].graspable {
        return (scene.clone(), GraspOutcome::Empty);
    }
    let mut out = scene.clone();
    out.blocks.remove(i);
    out.settle();
    let outcome = if id == scene.target_id {
        GraspOutcome::PickedTarget
    } else {
        GraspOutcome::PickedNontarget(id)
    };
    (out, outcome)
}
