//! Collision-free push and grasp candidates from the heightmap alone.
//!
//! Each generator enumerates every pixel of the region of interest around the
//! target, keeps placements that pass the spatial correlation test (SCT), and
//! draws a bounded, spatially balanced subset: survivors are split into four
//! quadrants about the target centroid and at most `per_quadrant_cap` are
//! sampled from each, every quadrant using its own seeded random stream.

use std::f64::consts::PI;
use std::io::Write;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    mm_to_tenths, push_start_footprint, rasterize_grasp, rasterize_push,
    roi_of_target, ActionKind, ActionMask, BitMask, GraspZones, Heightmap, Pixel, Region,
    RowMaxTable, Span, GRASP_ORIENTATIONS, GRID_SIZE, GRIPPER_WIDTH_PX,
};

/// Deflection of the side push directions from the facing direction.
pub const PUSH_DEFLECTION: f64 = PI / 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub push_height_margin_mm: f64,
    pub grasp_height_margin_mm: f64,
    pub per_quadrant_cap: usize,
    pub total_cap: usize,
    /// Keep every SCT-passing grasp centered on the target, outside the caps.
    pub exempt_on_target: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            push_height_margin_mm: 15.0,
            grasp_height_margin_mm: 25.0,
            per_quadrant_cap: 25,
            total_cap: 100,
            exempt_on_target: true,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.push_height_margin_mm > 0.0 && self.grasp_height_margin_mm > 0.0) {
            return Err(Error::InvalidArgument("SCT margins must be positive".into()));
        }
        if self.per_quadrant_cap == 0 || self.total_cap == 0 {
            return Err(Error::InvalidArgument("candidate caps must be positive".into()));
        }
        Ok(())
    }

    fn push_margin(&self) -> i32 {
        mm_to_tenths(self.push_height_margin_mm)
    }

    fn grasp_margin(&self) -> i32 {
        mm_to_tenths(self.grasp_height_margin_mm)
    }
}

/// Which enumerator feeds the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    #[default]
    Sct,
    /// Ablation: every ROI placement is eligible, SCT ignored, no exemption.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PushCandidate {
    pub start: Pixel,
    pub angle: f64,
    /// −1, 0 or +1: clockwise deflection, facing, counter-clockwise deflection.
    pub deflection: i8,
    pub quadrant: u8,
    /// Target top minus footprint max minus the push margin, tenths of mm.
    pub sct_margin: i32,
    pub mask: ActionMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspCandidate {
    pub center: Pixel,
    pub orientation_idx: u8,
    pub on_target: bool,
    pub quadrant: u8,
    /// Source pixel height minus finger max minus the grasp margin, tenths of mm.
    pub sct_margin: i32,
    pub mask: ActionMask,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionCandidate {
    Push(PushCandidate),
    Grasp(GraspCandidate),
}

impl ActionCandidate {
    pub fn kind(&self) -> ActionKind {
        match self {
            ActionCandidate::Push(_) => ActionKind::Push,
            ActionCandidate::Grasp(_) => ActionKind::Grasp,
        }
    }

    pub fn mask(&self) -> &ActionMask {
        match self {
            ActionCandidate::Push(p) => &p.mask,
            ActionCandidate::Grasp(g) => &g.mask,
        }
    }

    /// Start pixel of a push or center pixel of a grasp.
    pub fn pixel(&self) -> Pixel {
        match self {
            ActionCandidate::Push(p) => p.start,
            ActionCandidate::Grasp(g) => g.center,
        }
    }

    pub fn sct_margin(&self) -> i32 {
        match self {
            ActionCandidate::Push(p) => p.sct_margin,
            ActionCandidate::Grasp(g) => g.sct_margin,
        }
    }

    /// Angle in radians for a push, orientation index for a grasp.
    pub fn parameter(&self) -> f64 {
        match self {
            ActionCandidate::Push(p) => p.angle,
            ActionCandidate::Grasp(g) => g.orientation_idx as f64,
        }
    }

    pub fn push(start: Pixel, angle: f64) -> Self {
        ActionCandidate::Push(PushCandidate {
            start,
            angle,
            deflection: 0,
            quadrant: 0,
            sct_margin: 0,
            mask: rasterize_push(start, angle),
        })
    }

    pub fn grasp(center: Pixel, orientation_idx: u8, on_target: bool) -> Self {
        ActionCandidate::Grasp(GraspCandidate {
            center,
            orientation_idx,
            on_target,
            quadrant: 0,
            sct_margin: 0,
            mask: rasterize_grasp(center, orientation_idx),
        })
    }
}

/// Quadrant of `p` about `c`: bit 0 set left of `c`, bit 1 set above it.
pub fn quadrant(p: Pixel, c: Pixel) -> u8 {
    (p.x < c.x) as u8 | ((p.y < c.y) as u8) << 1
}

/// Facing direction from the push anchor of `start` to the target centroid.
pub fn facing_angle(start: Pixel, centroid: (f64, f64)) -> f64 {
    let (x, y) = start.corner();
    (centroid.1 - y).atan2(centroid.0 - x)
}

fn push_angles(start: Pixel, centroid: (f64, f64)) -> [(i8, f64); 3] {
    let t = facing_angle(start, centroid);
    [(0, t), (1, t + PUSH_DEFLECTION), (-1, t - PUSH_DEFLECTION)]
}

fn target_stats(hm: &Heightmap, tmask: &BitMask) -> Result<(Region, Pixel, (f64, f64), i32)> {
    let roi = roi_of_target(tmask)?;
    let centroid = tmask.centroid_f64().ok_or(Error::EmptyMask)?;
    Ok((roi, roi.center, centroid, hm.max_over(tmask) as i32))
}

/// Push SCT: the closed gripper's start footprint must sit at least the push
/// margin below the highest target pixel.
pub fn sct_push(hm: &Heightmap, tmask: &BitMask, start: Pixel, angle: f64, cfg: &GeneratorConfig) -> bool {
    let foot = push_start_footprint(start, angle)
        .clipped_spans()
        .iter()
        .flat_map(|s| (s.x0..s.x1).map(move |x| hm.get(Pixel::new(x, s.y))))
        .max()
        .unwrap_or(0) as i32;
    foot <= hm.max_over(tmask) as i32 - cfg.push_margin()
}

/// Grasp SCT: the source pixel, and with it the central zone around it, must
/// rise at least the grasp margin above both finger zones.
pub fn sct_grasp(hm: &Heightmap, center: Pixel, orientation_idx: u8, cfg: &GeneratorConfig) -> bool {
    let z = GraspZones::new(center, orientation_idx);
    let zmax = |r: &crate::grid::RotatedRect| {
        r.clipped_spans()
            .iter()
            .flat_map(|s| (s.x0..s.x1).map(move |x| hm.get(Pixel::new(x, s.y))))
            .max()
            .unwrap_or(0) as i32
    };
    let finger = zmax(&z.finger_a).max(zmax(&z.finger_b));
    let source = hm.get(center) as i32;
    source >= finger + cfg.grasp_margin() && zmax(&z.central) >= finger + cfg.grasp_margin()
}

/// Zone spans of one grasp orientation anchored at the grid origin; a grasp
/// centered on pixel `(x, y)` uses the same spans shifted by `(x, y)`.
struct GraspTemplate {
    fingers: Vec<Span>,
}

impl GraspTemplate {
    fn all() -> Vec<GraspTemplate> {
        (0..GRASP_ORIENTATIONS / 2)
            .map(|k| {
                let z = GraspZones::new(Pixel::new(0, 0), k);
                let mut fingers = z.finger_a.spans();
                fingers.extend(z.finger_b.spans());
                GraspTemplate { fingers }
            })
            .collect()
    }
}

/// Max over the square of pixels whose centers can lie in any start
/// footprint anchored at `p`, whatever the angle.
fn footprint_bound(table: &RowMaxTable, p: Pixel) -> u16 {
    let r = (GRIPPER_WIDTH_PX * 1.25f64.sqrt()).ceil() as i32 + 1;
    (p.y - r..p.y + r)
        .filter_map(|y| Span { y, x0: p.x - r, x1: p.x + r }.clipped())
        .map(|s| table.span_max(&s))
        .max()
        .unwrap_or(0)
}

/// Height of the pixel holding the footprint center; that pixel is always a member.
fn footprint_center_height(hm: &Heightmap, p: Pixel, angle: f64) -> u16 {
    let h = GRIPPER_WIDTH_PX / 2.0;
    let (x, y) = p.corner();
    let c = Pixel::new((x + h * angle.cos()).floor() as i32, (y + h * angle.sin()).floor() as i32);
    if c.in_bounds() {
        hm.get(c)
    } else {
        0
    }
}

/// Whether any in-grid member pixel of `rect` is higher than `limit`.
fn footprint_exceeds(hm: &Heightmap, rect: &crate::grid::RotatedRect, limit: i32) -> bool {
    let corners = rect.corners();
    let lo = |f: fn(&(f64, f64)) -> f64| corners.iter().map(f).fold(f64::INFINITY, f64::min).floor() as i32 - 1;
    let hi = |f: fn(&(f64, f64)) -> f64| corners.iter().map(f).fold(f64::NEG_INFINITY, f64::max).ceil() as i32 + 1;
    let n = GRID_SIZE as i32;
    for y in lo(|c| c.1).max(0)..hi(|c| c.1).min(n) {
        for x in lo(|c| c.0).max(0)..hi(|c| c.0).min(n) {
            let p = Pixel::new(x, y);
            if hm.get(p) as i32 > limit && rect.contains_pixel(x, y) {
                return true;
            }
        }
    }
    false
}

/// Every (start, deflection, angle) in the ROI passing the push SCT.
fn push_passing(hm: &Heightmap, tmask: &BitMask, cfg: &GeneratorConfig, table: &RowMaxTable) -> Result<Vec<(Pixel, i8, f64)>> {
    let (roi, _, centroid, tmax) = target_stats(hm, tmask)?;
    let limit = tmax - cfg.push_margin();
    let mut out = Vec::new();
    if limit < 0 {
        return Ok(out);
    }
    for p in roi.pixels() {
        let clear = footprint_bound(table, p) as i32 <= limit;
        for (defl, angle) in push_angles(p, centroid) {
            let pass = clear
                || (footprint_center_height(hm, p, angle) as i32 <= limit
                    && !footprint_exceeds(hm, &push_start_footprint(p, angle), limit));
            if pass {
                out.push((p, defl, angle));
            }
        }
    }
    Ok(out)
}

fn push_margin_of(table: &RowMaxTable, limit: i32, p: Pixel, angle: f64) -> i32 {
    limit - table.max_over(&push_start_footprint(p, angle).spans()) as i32
}

/// Every (start, angle) in the ROI passing the push SCT, with its margin.
pub fn push_survivors(hm: &Heightmap, tmask: &BitMask, cfg: &GeneratorConfig) -> Result<Vec<(Pixel, i8, f64, i32)>> {
    let table = RowMaxTable::new(hm);
    let limit = hm.max_over(tmask) as i32 - cfg.push_margin();
    Ok(push_passing(hm, tmask, cfg, &table)?
        .into_iter()
        .map(|(p, d, a)| (p, d, a, push_margin_of(&table, limit, p, a)))
        .collect())
}

/// Every (center, orientation) in the ROI passing the grasp SCT, with its margin.
pub fn grasp_survivors(hm: &Heightmap, tmask: &BitMask, cfg: &GeneratorConfig) -> Result<Vec<(Pixel, u8, i32)>> {
    let roi = roi_of_target(tmask)?;
    let table = RowMaxTable::new(hm);
    let templates = GraspTemplate::all();
    let margin = cfg.grasp_margin();
    let mut out = Vec::new();
    for p in roi.pixels() {
        // the central zone contains the source pixel, so its max is never lower
        let ceiling = hm.get(p) as i32 - margin;
        if ceiling < 0 {
            continue;
        }
        for (k, t) in templates.iter().enumerate() {
            let mut finger = 0i32;
            for s in &t.fingers {
                if let Some(c) = s.shifted(p.x, p.y).clipped() {
                    finger = finger.max(table.span_max(&c) as i32);
                    if finger > ceiling {
                        break;
                    }
                }
            }
            if finger <= ceiling {
                let k = k as u8;
                out.push((p, k, ceiling - finger));
                out.push((p, k + GRASP_ORIENTATIONS / 2, ceiling - finger));
            }
        }
    }
    out.sort_by_key(|&(p, k, _)| (p.index(), k));
    Ok(out)
}

/// Sample at most `cap` of each quadrant's items, preserving enumeration order.
fn sample_quadrants<T>(items: Vec<(u8, T)>, cap: usize, total_cap: usize, seed: u64, kind: ActionKind) -> Vec<T> {
    let mut buckets: [Vec<T>; 4] = Default::default();
    for (q, item) in items {
        buckets[q as usize].push(item);
    }
    let mut out = Vec::new();
    for (q, bucket) in buckets.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(kind.code() as u64 * 4 + q as u64);
        let n = bucket.len();
        let mut picked = index::sample(&mut rng, n, cap.min(n)).into_vec();
        picked.sort_unstable();
        let mut keep = vec![false; n];
        for i in picked {
            keep[i] = true;
        }
        out.extend(bucket.into_iter().zip(keep).filter(|(_, k)| *k).map(|(t, _)| t));
    }
    out.truncate(total_cap);
    out
}

/// SCT push candidates: every ROI pixel in three directions (facing the
/// target centroid and deflected ±22.5°, positive counter-clockwise), then
/// quadrant-balanced sampling.
pub fn generate_pushes(hm: &Heightmap, tmask: &BitMask, cfg: &GeneratorConfig, seed: u64) -> Result<Vec<PushCandidate>> {
    let (_, c, _, tmax) = target_stats(hm, tmask)?;
    let table = RowMaxTable::new(hm);
    let limit = tmax - cfg.push_margin();
    let passing = push_passing(hm, tmask, cfg, &table)?
        .into_iter()
        .map(|s| (quadrant(s.0, c), s))
        .collect();
    let picked = sample_quadrants(passing, cfg.per_quadrant_cap, cfg.total_cap, seed, ActionKind::Push)
        .into_iter()
        .map(|(p, d, a)| (p, d, a, push_margin_of(&table, limit, p, a)))
        .collect();
    finish_pushes(picked, c)
}

fn finish_pushes(picked: Vec<(Pixel, i8, f64, i32)>, c: Pixel) -> Result<Vec<PushCandidate>> {
    if picked.is_empty() {
        return Err(Error::NoCandidates);
    }
    Ok(picked
        .into_iter()
        .map(|(start, deflection, angle, sct_margin)| PushCandidate {
            start,
            angle,
            deflection,
            quadrant: quadrant(start, c),
            sct_margin,
            mask: rasterize_push(start, angle),
        })
        .collect())
}

fn finish_grasps(picked: Vec<(Pixel, u8, i32)>, tmask: &BitMask, c: Pixel) -> Vec<GraspCandidate> {
    picked
        .into_iter()
        .map(|(center, orientation_idx, sct_margin)| GraspCandidate {
            center,
            orientation_idx,
            on_target: tmask.get(center),
            quadrant: quadrant(center, c),
            sct_margin,
            mask: rasterize_grasp(center, orientation_idx),
        })
        .collect()
}

/// SCT grasp candidates: every ROI pixel in 16 orientations. Grasps centered
/// on the target bypass the caps when `cfg.exempt_on_target` is set.
pub fn generate_grasps(hm: &Heightmap, tmask: &BitMask, cfg: &GeneratorConfig, seed: u64) -> Result<Vec<GraspCandidate>> {
    let c = roi_of_target(tmask)?.center;
    let mut exempt = Vec::new();
    let mut capped = Vec::new();
    for s in grasp_survivors(hm, tmask, cfg)? {
        if cfg.exempt_on_target && tmask.get(s.0) {
            exempt.push(s);
        } else {
            capped.push((quadrant(s.0, c), s));
        }
    }
    exempt.extend(sample_quadrants(capped, cfg.per_quadrant_cap, cfg.total_cap, seed, ActionKind::Grasp));
    if exempt.is_empty() {
        return Err(Error::NoCandidates);
    }
    Ok(finish_grasps(exempt, tmask, c))
}

/// Ablation pushes: ROI placements drawn without the SCT.
pub fn generate_pushes_random(hm: &Heightmap, tmask: &BitMask, cfg: &GeneratorConfig, seed: u64) -> Result<Vec<PushCandidate>> {
    let (roi, c, centroid, tmax) = target_stats(hm, tmask)?;
    let table = RowMaxTable::new(hm);
    let limit = tmax - cfg.push_margin();
    let all = roi
        .pixels()
        .flat_map(|p| push_angles(p, centroid).map(|(d, a)| (p, d, a)))
        .map(|(p, d, a)| (quadrant(p, c), (p, d, a)))
        .collect();
    let picked = sample_quadrants(all, cfg.per_quadrant_cap, cfg.total_cap, seed, ActionKind::Push)
        .into_iter()
        .map(|(p, d, a)| (p, d, a, push_margin_of(&table, limit, p, a)))
        .collect();
    finish_pushes(picked, c)
}

/// Ablation grasps: ROI placements drawn without the SCT or the on-target exemption.
pub fn generate_grasps_random(hm: &Heightmap, tmask: &BitMask, cfg: &GeneratorConfig, seed: u64) -> Result<Vec<GraspCandidate>> {
    let roi = roi_of_target(tmask)?;
    let c = roi.center;
    let all = roi
        .pixels()
        .flat_map(|p| (0..GRASP_ORIENTATIONS).map(move |k| (quadrant(p, c), (p, k))))
        .collect();
    let templates = GraspTemplate::all();
    let table = RowMaxTable::new(hm);
    let picked: Vec<_> = sample_quadrants(all, cfg.per_quadrant_cap, cfg.total_cap, seed, ActionKind::Grasp)
        .into_iter()
        .map(|(p, k)| {
            let t = &templates[(k % 8) as usize];
            let finger = table.max_over_shifted(&t.fingers, p.x, p.y) as i32;
            (p, k, hm.get(p) as i32 - finger - cfg.grasp_margin())
        })
        .collect();
    if picked.is_empty() {
        return Err(Error::NoCandidates);
    }
    Ok(finish_grasps(picked, tmask, c))
}

pub fn pushes(kind: GeneratorKind, hm: &Heightmap, tmask: &BitMask, cfg: &GeneratorConfig, seed: u64) -> Result<Vec<PushCandidate>> {
    match kind {
        GeneratorKind::Sct => generate_pushes(hm, tmask, cfg, seed),
        GeneratorKind::Random => generate_pushes_random(hm, tmask, cfg, seed),
    }
}

pub fn grasps(kind: GeneratorKind, hm: &Heightmap, tmask: &BitMask, cfg: &GeneratorConfig, seed: u64) -> Result<Vec<GraspCandidate>> {
    match kind {
        GeneratorKind::Sct => generate_grasps(hm, tmask, cfg, seed),
        GeneratorKind::Random => generate_grasps_random(hm, tmask, cfg, seed),
    }
}

/// Write candidates as whitespace-separated lines:
///
/// ```text
/// push  <x> <y> <angle_rad> <quadrant> <sct_margin_mm> <deflection>
/// grasp <x> <y> <orientation> <quadrant> <sct_margin_mm> <on_target 0|1>
/// ```
pub fn write_candidate_dump<W: Write>(w: &mut W, pushes: &[PushCandidate], grasps: &[GraspCandidate]) -> Result<()> {
    writeln!(w, "# kind x y angle|orientation quadrant sct_margin_mm deflection|on_target")?;
    for p in pushes {
        writeln!(
            w,
            "push {} {} {:.6} {} {:.1} {}",
            p.start.x,
            p.start.y,
            p.angle,
            p.quadrant,
            p.sct_margin as f64 / 10.0,
            p.deflection
        )?;
    }
    for g in grasps {
        writeln!(
            w,
            "grasp {} {} {} {} {:.1} {}",
            g.center.x,
            g.center.y,
            g.orientation_idx,
            g.quadrant,
            g.sct_margin as f64 / 10.0,
            g.on_target as u8
        )?;
    }
    Ok(())
}
