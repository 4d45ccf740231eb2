//! Ground-truth 2.5D tabletop world.
//!
//! Blocks are convex prisms. Each rests either on the table or on the highest
//! block whose footprint overlaps its own by more than [`OVERLAP_TOL_M`];
//! heights are integer tenths of a millimetre. The heightmap is the per-pixel
//! maximum of block tops over pixel centers strictly inside each footprint.

mod block;
mod scenario;
mod sim;
mod spawn;

pub use block::{Block, Pose, ShapeKind, CYLINDER_SIDES, HALF_CYLINDER_SEGMENTS};
pub use scenario::{load_scenario, save_scenario, scenario_from_json, scenario_to_json};
pub use sim::{
    finger_polygons_world, gripper_polygon_world, simulate_grasp, simulate_push, GraspOutcome, CLOSING_MAX_PX,
    CLOSING_MIN_PX, FINGER_DESCENT_MARGIN_TENTHS, MAX_CHAIN_DEPTH, SUPPORT_LOSS_M,
};
pub use spawn::{spawn_random_clutter, SpawnConfig, MIN_VISIBLE_TARGET_PX};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Vec2};
use crate::grid::{pixel_center_world, BitMask, Heightmap, Pixel, RotatedRect, CELL_SIZE_M, GRID_SIZE, MAX_HEIGHT_TENTHS};

/// Footprints overlapping by less than this are treated as side by side.
pub const OVERLAP_TOL_M: f64 = 0.001;
/// Side of the square workspace in metres.
pub const WORKSPACE_M: f64 = GRID_SIZE as f64 * CELL_SIZE_M;

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Blocks in drop order.
    pub blocks: Vec<Block>,
    pub target_id: u32,
    pub rng_seed: u64,
}

impl Scene {
    /// Drop `blocks` in the given order, each landing on whatever lies beneath it.
    pub fn dropped(blocks: Vec<Block>, target_id: u32, rng_seed: u64) -> Result<Self> {
        let mut ids: Vec<u32> = blocks.iter().map(|b| b.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate block id".into()));
        }
        if !ids.contains(&target_id) {
            return Err(Error::MissingTarget);
        }
        let mut scene = Self {
            blocks,
            target_id,
            rng_seed,
        };
        for b in &mut scene.blocks {
            b.base = 0;
        }
        scene.settle();
        Ok(scene)
    }

    pub fn target(&self) -> Option<&Block> {
        self.blocks.iter().find(|b| b.id == self.target_id)
    }

    pub fn has_target(&self) -> bool {
        self.target().is_some()
    }

    pub fn block(&self, id: u32) -> Option<&Block> {
        self.blocks.iter().find(|b| b.id == id)
    }

    /// Recompute resting heights: blocks are visited lowest first (drop order
    /// breaks ties) and land on the highest already-placed block they overlap.
    pub fn settle(&mut self) {
        let mut order: Vec<usize> = (0..self.blocks.len()).collect();
        order.sort_by_key(|&i| self.blocks[i].base);
        let polys: Vec<ConvexPolygon> = self.blocks.iter().map(Block::footprint).collect();
        let mut placed: Vec<usize> = Vec::with_capacity(order.len());
        for &i in &order {
            let base = placed
                .iter()
                .filter(|&&j| polys[i].penetration(&polys[j]) > OVERLAP_TOL_M)
                .map(|&j| self.blocks[j].top())
                .max()
                .unwrap_or(0);
            assert!(
                base + self.blocks[i].height < MAX_HEIGHT_TENTHS,
                "stack exceeds the height range"
            );
            self.blocks[i].base = base;
            placed.push(i);
        }
    }

    pub fn render_heightmap(&self) -> Heightmap {
        let mut cells = vec![0u16; GRID_SIZE * GRID_SIZE];
        for b in &self.blocks {
            let top = b.top();
            for i in block_pixels(b) {
                cells[i] = cells[i].max(top);
            }
        }
        Heightmap::from_tenths(cells).expect("block heights are range-checked on settle")
    }

    /// Pixels where the target is the topmost surface.
    pub fn target_mask(&self) -> Result<BitMask> {
        let target = self.target().ok_or(Error::MissingTarget)?;
        let hm = self.render_heightmap();
        Ok(visible_mask(target, &hm))
    }

    /// Pixels where block `id` is the topmost surface.
    pub fn visible_mask_of(&self, id: u32, hm: &Heightmap) -> Option<BitMask> {
        self.block(id).map(|b| visible_mask(b, hm))
    }

    /// SHA-256 over the canonical block list, hex encoded.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.target_id.to_le_bytes());
        h.update(self.rng_seed.to_le_bytes());
        for b in &self.blocks {
            h.update(b.id.to_le_bytes());
            h.update([b.shape as u8, b.color, b.graspable as u8]);
            h.update(b.height.to_le_bytes());
            h.update(b.base.to_le_bytes());
            for v in [b.pose.x, b.pose.y, b.pose.yaw] {
                h.update(v.to_le_bytes());
            }
            for p in b.local_vertices() {
                h.update(p[0].to_le_bytes());
                h.update(p[1].to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn visible_mask(target: &Block, hm: &Heightmap) -> BitMask {
    let top = target.top();
    let mut m = BitMask::empty();
    for i in block_pixels(target) {
        if hm.cells()[i] == top {
            m.set_index(i, true);
        }
    }
    m
}

/// Range of pixel indices whose centers may fall inside `[lo, hi]` (metres).
fn pixel_range(lo: f64, hi: f64) -> std::ops::Range<i32> {
    let a = ((lo / CELL_SIZE_M) - 0.5).floor() as i32;
    let b = ((hi / CELL_SIZE_M) - 0.5).ceil() as i32 + 1;
    a.max(0)..b.min(GRID_SIZE as i32)
}

/// In-bounds pixels whose centers lie strictly inside the block footprint.
pub fn block_pixels(b: &Block) -> Vec<usize> {
    polygon_pixels(&b.footprint(), |poly, p| poly.contains(p))
}

fn polygon_pixels(poly: &ConvexPolygon, inside: impl Fn(&ConvexPolygon, [f64; 2]) -> bool) -> Vec<usize> {
    let (lo, hi) = poly.bbox();
    let mut out = Vec::new();
    for y in pixel_range(lo[1], hi[1]) {
        for x in pixel_range(lo[0], hi[0]) {
            let p = Pixel::new(x, y);
            if inside(poly, pixel_center_world(p)) {
                out.push(p.index());
            }
        }
    }
    out
}

/// World-frame polygon of a pixel-space rectangle.
pub fn rect_to_world(rect: &RotatedRect) -> ConvexPolygon {
    ConvexPolygon::new(
        rect.corners()
            .iter()
            .map(|&(x, y)| [x * CELL_SIZE_M, y * CELL_SIZE_M])
            .collect(),
    )
}

/// Exhaustive check: does any block surface inside any of `polygons` rise
/// above `descent_tenths`? Every in-bounds pixel center inside a polygon
/// (boundary included) is tested against every block footprint.
pub fn collision_oracle(scene: &Scene, polygons: &[ConvexPolygon], descent_tenths: i32) -> bool {
    let tall: Vec<(ConvexPolygon, (Vec2, Vec2))> = scene
        .blocks
        .iter()
        .filter(|b| b.top() as i32 > descent_tenths)
        .map(|b| {
            let f = b.footprint();
            let bb = f.bbox();
            (f, bb)
        })
        .collect();
    polygons.iter().any(|poly| {
        let (lo, hi) = poly.bbox();
        let near: Vec<&ConvexPolygon> = tall
            .iter()
            .filter(|(_, (a, b))| a[0] <= hi[0] && lo[0] <= b[0] && a[1] <= hi[1] && lo[1] <= b[1])
            .map(|(f, _)| f)
            .collect();
        !near.is_empty()
            && polygon_pixels(poly, |poly, p| poly.contains_closed(p, 1e-12))
                .into_iter()
                .any(|i| {
                    let c = pixel_center_world(Pixel::from_index(i));
                    near.iter().any(|f| f.contains(c))
                })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Axis-aligned cuboid covering pixels `[x0, x0+w) × [y0, y0+h)`.
    pub(crate) fn px_cuboid(id: u32, x0: i32, y0: i32, w: i32, h: i32, height_mm: f64) -> Block {
        let cx = (x0 as f64 + w as f64 / 2.0) * CELL_SIZE_M;
        let cy = (y0 as f64 + h as f64 / 2.0) * CELL_SIZE_M;
        Block::cuboid(
            id,
            w as f64 * CELL_SIZE_M,
            h as f64 * CELL_SIZE_M,
            height_mm,
            Pose { x: cx, y: cy, yaw: 0.0 },
        )
    }

    #[test]
    fn empty_scene_renders_flat() {
        let s = Scene { blocks: vec![], target_id: 0, rng_seed: 0 };
        assert_eq!(s.render_heightmap().max(), 0);
        assert!(matches!(s.target_mask(), Err(Error::MissingTarget)));
    }

    #[test]
    fn single_cuboid_plateau() {
        let s = Scene::dropped(vec![px_cuboid(1, 100, 100, 15, 10, 40.0)], 1, 0).unwrap();
        let hm = s.render_heightmap();
        let plateau: Vec<u16> = hm.cells().iter().copied().filter(|&h| h > 0).collect();
        assert_eq!(plateau.len(), 150);
        assert!(plateau.iter().all(|&h| h == 400));
        assert_eq!(s.target_mask().unwrap().count(), 150);
    }

    #[test]
    fn stacked_blocks_add_heights() {
        let a = px_cuboid(1, 100, 100, 20, 20, 30.0);
        let b = px_cuboid(2, 105, 105, 10, 10, 20.0);
        let s = Scene::dropped(vec![a, b], 1, 0).unwrap();
        let hm = s.render_heightmap();
        assert_eq!(hm.get(Pixel::new(110, 110)), 500);
        assert_eq!(hm.get(Pixel::new(101, 101)), 300);
        // target visible everywhere except under the top block
        assert_eq!(s.target_mask().unwrap().count(), 400 - 100);
    }

    #[test]
    fn fully_covered_target_is_invisible() {
        let a = px_cuboid(1, 100, 100, 10, 10, 30.0);
        let b = px_cuboid(2, 98, 98, 14, 14, 20.0);
        let s = Scene::dropped(vec![a, b], 1, 0).unwrap();
        assert!(s.target_mask().unwrap().is_empty());
    }

    #[test]
    fn half_covered_target() {
        let t = px_cuboid(1, 100, 100, 20, 20, 30.0);
        let cover = px_cuboid(2, 100, 90, 20, 20, 20.0);
        let s = Scene::dropped(vec![t, cover], 1, 0).unwrap();
        let n = s.target_mask().unwrap().count();
        assert!((180..=220).contains(&n), "{n}");
    }

    #[test]
    fn oracle_direct_exceedance() {
        let s = Scene::dropped(vec![px_cuboid(1, 100, 100, 10, 10, 50.0)], 1, 0).unwrap();
        let poly = s.blocks[0].footprint();
        assert!(collision_oracle(&s, &[poly.clone()], 400));
        assert!(!collision_oracle(&s, &[poly.clone()], 600));
        let empty = Scene { blocks: vec![], target_id: 0, rng_seed: 0 };
        assert!(!collision_oracle(&empty, &[poly], -1000));
    }

    #[test]
    fn raising_a_block_never_lowers_pixels() {
        let mut s = Scene::dropped(
            vec![px_cuboid(1, 100, 100, 20, 20, 30.0), px_cuboid(2, 110, 95, 20, 30, 25.0)],
            1,
            0,
        )
        .unwrap();
        let before = s.render_heightmap();
        s.blocks[0].height += 50;
        s.settle();
        let after = s.render_heightmap();
        assert!(before.cells().iter().zip(after.cells()).all(|(a, b)| b >= a));
    }
}

#[cfg(test)]
pub(crate) use tests::px_cuboid;
