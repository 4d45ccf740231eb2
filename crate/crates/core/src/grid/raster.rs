use std::f64::consts::PI;

use super::{Pixel, GRID_SIZE};

pub const GRIPPER_WIDTH_PX: f64 = 12.0;
pub const PUSH_MASK_LENGTH_PX: f64 = 62.0;
/// Distance the closed gripper travels; its 12 px footprint sweeps the 62 px band.
pub const PUSH_TRAVEL_PX: f64 = PUSH_MASK_LENGTH_PX - GRIPPER_WIDTH_PX;
pub const GRASP_MASK_LENGTH_PX: f64 = 60.0;
pub const FINGER_ZONE_PX: f64 = 12.0;
pub const GRASP_ORIENTATIONS: u8 = 16;
pub const PUSH_MASK_NONZERO: usize = 744;
pub const GRASP_MASK_NONZERO: usize = 720;

const AXIS_EPS: f64 = 1e-9;
/// Bias applied to the half-open bounds so exact ties (pixel centers on the
/// `u = 0` edge of a push whose direction has odd/odd integer slope) resolve
/// as the exact arithmetic would: lower bounds inclusive, upper exclusive.
const TIE_EPS: f64 = 1e-9;

/// Rotation of grasp orientation `idx` (multiples of 22.5°). Orientations `k`
/// and `k + 8` describe the same rectangle and share an angle here.
pub fn grasp_orientation_angle(idx: u8) -> f64 {
    (idx % 8) as f64 * PI / 8.0
}

/// Horizontal run of pixels `[x0, x1)` in row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub y: i32,
    pub x0: i32,
    pub x1: i32,
}

impl Span {
    pub fn len(&self) -> usize {
        (self.x1 - self.x0).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.x1 <= self.x0
    }

    pub fn shifted(self, dx: i32, dy: i32) -> Span {
        Span {
            y: self.y + dy,
            x0: self.x0 + dx,
            x1: self.x1 + dx,
        }
    }

    /// Clip to the grid; `None` if nothing remains.
    pub fn clipped(self) -> Option<Span> {
        let n = GRID_SIZE as i32;
        if !(0..n).contains(&self.y) {
            return None;
        }
        let s = Span {
            y: self.y,
            x0: self.x0.max(0),
            x1: self.x1.min(n),
        };
        (!s.is_empty()).then_some(s)
    }
}

/// Rectangle in the action frame: `u` runs along `angle`, `v` to its left
/// (rotated +90°). A pixel belongs to it when its center satisfies
/// `u0 ≤ u < u1` and `v0 ≤ v < v1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedRect {
    pub anchor: (f64, f64),
    pub cos: f64,
    pub sin: f64,
    pub u: (f64, f64),
    pub v: (f64, f64),
}

impl RotatedRect {
    pub fn new(anchor: (f64, f64), angle: f64, u: (f64, f64), v: (f64, f64)) -> Self {
        Self {
            anchor,
            cos: angle.cos(),
            sin: angle.sin(),
            u,
            v,
        }
    }

    /// Action-frame coordinates of a continuous pixel-space point.
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.anchor.0;
        let dy = y - self.anchor.1;
        (dx * self.cos + dy * self.sin, -dx * self.sin + dy * self.cos)
    }

    pub fn contains_pixel(&self, x: i32, y: i32) -> bool {
        let (u, v) = self.to_local(x as f64 + 0.5, y as f64 + 0.5);
        u >= self.u.0 - TIE_EPS
            && u < self.u.1 - TIE_EPS
            && v >= self.v.0 - TIE_EPS
            && v < self.v.1 - TIE_EPS
    }

    /// Corners in continuous pixel coordinates, counter-clockwise in the action frame.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let p = |u: f64, v: f64| {
            (
                self.anchor.0 + u * self.cos - v * self.sin,
                self.anchor.1 + u * self.sin + v * self.cos,
            )
        };
        [
            p(self.u.0, self.v.0),
            p(self.u.1, self.v.0),
            p(self.u.1, self.v.1),
            p(self.u.0, self.v.1),
        ]
    }

    /// Row spans of member pixels, not clipped to the grid.
    pub fn spans(&self) -> Vec<Span> {
        let corners = self.corners();
        let ymin = corners.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let ymax = corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let mut out = Vec::with_capacity((ymax - ymin) as usize + 3);
        for y in (ymin.floor() as i32 - 1)..=(ymax.ceil() as i32 + 1) {
            if let Some(s) = self.row_span(y) {
                out.push(s);
            }
        }
        out
    }

    /// Member pixels in row `y` as a contiguous run, verified with the exact
    /// pixel predicate at both ends.
    fn row_span(&self, y: i32) -> Option<Span> {
        let py = y as f64 + 0.5 - self.anchor.1;
        // u = px*cos + py*sin, v = -px*sin + py*cos, solve each for px.
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (a, b, (c0, c1)) in [
            (self.cos, py * self.sin, self.u),
            (-self.sin, py * self.cos, self.v),
        ] {
            if a.abs() < AXIS_EPS {
                if b < c0 - 1e-6 || b >= c1 + 1e-6 {
                    return None;
                }
                continue;
            }
            let (mut l, mut h) = ((c0 - b) / a, (c1 - b) / a);
            if l > h {
                std::mem::swap(&mut l, &mut h);
            }
            lo = lo.max(l);
            hi = hi.min(h);
        }
        if lo.is_infinite() || hi.is_infinite() || lo > hi + 2.0 {
            return None;
        }
        let base = self.anchor.0 - 0.5;
        let mut x0 = (lo + base).floor() as i32 - 1;
        let mut x1 = (hi + base).ceil() as i32 + 1;
        while x0 <= x1 && !self.contains_pixel(x0, y) {
            x0 += 1;
        }
        while x1 >= x0 && !self.contains_pixel(x1, y) {
            x1 -= 1;
        }
        (x0 <= x1).then_some(Span { y, x0, x1: x1 + 1 })
    }

    pub fn clipped_spans(&self) -> Vec<Span> {
        self.spans().into_iter().filter_map(Span::clipped).collect()
    }

    pub fn pixel_count(&self) -> usize {
        self.spans().iter().map(Span::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Push,
    Grasp,
}

impl ActionKind {
    pub fn code(self) -> u8 {
        match self {
            ActionKind::Push => 0,
            ActionKind::Grasp => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(ActionKind::Push),
            1 => Some(ActionKind::Grasp),
            _ => None,
        }
    }

    pub fn nominal_pixels(self) -> usize {
        match self {
            ActionKind::Push => PUSH_MASK_NONZERO,
            ActionKind::Grasp => GRASP_MASK_NONZERO,
        }
    }
}

/// Run of equal mask values, clipped to the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpan {
    pub y: u16,
    pub x0: u16,
    pub x1: u16,
    pub value: f32,
}

/// Sparse 224×224 action mask over `{0, 0.5, 1.0}`, stored as row runs in
/// canonical order (sorted, adjacent equal-valued runs merged).
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMask {
    kind: ActionKind,
    spans: Vec<MaskSpan>,
}

impl ActionMask {
    fn from_runs(kind: ActionKind, mut spans: Vec<MaskSpan>) -> Self {
        spans.sort_by_key(|s| (s.y, s.x0));
        let mut merged: Vec<MaskSpan> = Vec::with_capacity(spans.len());
        for s in spans {
            match merged.last_mut() {
                Some(m) if m.y == s.y && m.x1 == s.x0 && m.value == s.value => m.x1 = s.x1,
                _ => merged.push(s),
            }
        }
        Self {
            kind,
            spans: merged,
        }
    }

    fn push_rect(spans: &mut Vec<MaskSpan>, rect: &RotatedRect, value: f32) {
        spans.extend(rect.clipped_spans().into_iter().map(|s| MaskSpan {
            y: s.y as u16,
            x0: s.x0 as u16,
            x1: s.x1 as u16,
            value,
        }));
    }

    pub fn kind(&self) -> ActionKind {
        self.kind
    }

    pub fn spans(&self) -> &[MaskSpan] {
        &self.spans
    }

    pub fn get(&self, p: Pixel) -> f32 {
        if !p.in_bounds() {
            return 0.0;
        }
        self.spans
            .iter()
            .find(|s| s.y as i32 == p.y && (s.x0 as i32..s.x1 as i32).contains(&p.x))
            .map_or(0.0, |s| s.value)
    }

    pub fn nonzero_count(&self) -> usize {
        self.spans.iter().map(|s| (s.x1 - s.x0) as usize).sum()
    }

    pub fn count_value(&self, value: f32) -> usize {
        self.spans
            .iter()
            .filter(|s| s.value == value)
            .map(|s| (s.x1 - s.x0) as usize)
            .sum()
    }

    /// Fraction of the nominal rectangle that landed inside the grid.
    pub fn coverage(&self) -> f64 {
        self.nonzero_count() as f64 / self.kind.nominal_pixels() as f64
    }

    /// Nonzero pixels with their values, row-major.
    pub fn iter(&self) -> impl Iterator<Item = (Pixel, f32)> + '_ {
        self.spans.iter().flat_map(|s| {
            (s.x0..s.x1).map(move |x| (Pixel::new(x as i32, s.y as i32), s.value))
        })
    }

    pub fn to_dense(&self) -> Vec<f32> {
        let mut out = vec![0.0; GRID_SIZE * GRID_SIZE];
        for (p, v) in self.iter() {
            out[p.index()] = v;
        }
        out
    }

    pub fn from_dense(kind: ActionKind, values: &[f32]) -> Self {
        assert_eq!(values.len(), GRID_SIZE * GRID_SIZE);
        let mut spans = Vec::new();
        for y in 0..GRID_SIZE {
            let row = &values[y * GRID_SIZE..(y + 1) * GRID_SIZE];
            let mut x = 0;
            while x < GRID_SIZE {
                let v = row[x];
                if v == 0.0 {
                    x += 1;
                    continue;
                }
                let start = x;
                while x < GRID_SIZE && row[x] == v {
                    x += 1;
                }
                spans.push(MaskSpan {
                    y: y as u16,
                    x0: start as u16,
                    x1: x as u16,
                    value: v,
                });
            }
        }
        Self::from_runs(kind, spans)
    }
}

/// Push mask: the 62×12 band swept from `start` along `angle`; the proximal
/// half of the route is 0.5, the distal half 1.0. Off-grid pixels are dropped.
pub fn rasterize_push(start: Pixel, angle: f64) -> ActionMask {
    let half = PUSH_MASK_LENGTH_PX / 2.0;
    let w = GRIPPER_WIDTH_PX / 2.0;
    let near = RotatedRect::new(start.corner(), angle, (0.0, half), (-w, w));
    let far = RotatedRect::new(start.corner(), angle, (half, PUSH_MASK_LENGTH_PX), (-w, w));
    let mut spans = Vec::new();
    ActionMask::push_rect(&mut spans, &near, 0.5);
    ActionMask::push_rect(&mut spans, &far, 1.0);
    ActionMask::from_runs(ActionKind::Push, spans)
}

/// Grasp mask: the 60×12 open-gripper rectangle centered on `center`.
pub fn rasterize_grasp(center: Pixel, orientation_idx: u8) -> ActionMask {
    assert!(orientation_idx < GRASP_ORIENTATIONS, "orientation index out of range");
    let rect = GraspZones::new(center, orientation_idx).full;
    let mut spans = Vec::new();
    ActionMask::push_rect(&mut spans, &rect, 1.0);
    ActionMask::from_runs(ActionKind::Grasp, spans)
}

/// Closed-gripper footprint at the start of a push.
pub fn push_start_footprint(start: Pixel, angle: f64) -> RotatedRect {
    let w = GRIPPER_WIDTH_PX / 2.0;
    RotatedRect::new(start.corner(), angle, (0.0, GRIPPER_WIDTH_PX), (-w, w))
}

/// Sub-rectangles of a grasp: the whole opening, the 12×12 central zone,
/// the two 12×12 finger zones at the ends, and the gap between the fingers.
#[derive(Debug, Clone, Copy)]
pub struct GraspZones {
    pub full: RotatedRect,
    pub central: RotatedRect,
    pub finger_a: RotatedRect,
    pub finger_b: RotatedRect,
    pub gap: RotatedRect,
}

impl GraspZones {
    pub fn new(center: Pixel, orientation_idx: u8) -> Self {
        let a = grasp_orientation_angle(orientation_idx);
        let c = center.corner();
        let half = GRASP_MASK_LENGTH_PX / 2.0;
        let w = GRIPPER_WIDTH_PX / 2.0;
        let inner = half - FINGER_ZONE_PX;
        let rect = |u0, u1| RotatedRect::new(c, a, (u0, u1), (-w, w));
        Self {
            full: rect(-half, half),
            central: rect(-w, w),
            finger_a: rect(-half, -inner),
            finger_b: rect(inner, half),
            gap: rect(-inner, inner),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_axis_aligned_counts() {
        let m = rasterize_push(Pixel::new(112, 112), 0.0);
        assert_eq!(m.count_value(0.5), 372);
        assert_eq!(m.count_value(1.0), 372);
        assert_eq!(m.nonzero_count(), PUSH_MASK_NONZERO);
        assert!((m.coverage() - 1.0).abs() < 1e-12);
        // first half starts at the anchor column
        assert_eq!(m.get(Pixel::new(112, 112)), 0.5);
        assert_eq!(m.get(Pixel::new(142, 112)), 0.5);
        assert_eq!(m.get(Pixel::new(143, 112)), 1.0);
        assert_eq!(m.get(Pixel::new(173, 112)), 1.0);
        assert_eq!(m.get(Pixel::new(174, 112)), 0.0);
        assert_eq!(m.get(Pixel::new(112, 106)), 0.5);
        assert_eq!(m.get(Pixel::new(112, 105)), 0.0);
        assert_eq!(m.get(Pixel::new(112, 117)), 0.5);
        assert_eq!(m.get(Pixel::new(112, 118)), 0.0);
    }

    #[test]
    fn push_clipped_at_corner() {
        let m = rasterize_push(Pixel::new(0, 0), PI + PI / 4.0);
        assert!(m.nonzero_count() < PUSH_MASK_NONZERO);
        assert!(m.coverage() < 1.0);
    }

    #[test]
    fn push_quarter_turn_is_exact_rotation() {
        let s = Pixel::new(100, 90);
        let m0 = rasterize_push(s, 0.0);
        let m90 = rasterize_push(s, PI / 2.0);
        assert_eq!(m0.nonzero_count(), m90.nonzero_count());
        // (dx, dy) -> (-dy, dx) about the anchor corner on half-integer offsets
        for (p, v) in m0.iter() {
            let q = Pixel::new(s.x - (p.y - s.y) - 1, s.y + (p.x - s.x));
            assert_eq!(m90.get(q), v, "{p:?} -> {q:?}");
        }
    }

    #[test]
    fn grasp_axis_aligned_count() {
        let m = rasterize_grasp(Pixel::new(112, 112), 0);
        assert_eq!(m.nonzero_count(), GRASP_MASK_NONZERO);
        assert_eq!(m.count_value(1.0), GRASP_MASK_NONZERO);
    }

    #[test]
    fn grasp_opposite_orientations_match() {
        for k in 0..8 {
            let c = Pixel::new(97, 131);
            assert_eq!(rasterize_grasp(c, k), rasterize_grasp(c, k + 8));
        }
    }

    #[test]
    fn grasp_quarter_turn_is_transpose() {
        let c = Pixel::new(112, 112);
        let m0 = rasterize_grasp(c, 0);
        let m4 = rasterize_grasp(c, 4);
        for (p, _) in m0.iter() {
            let q = Pixel::new(c.x + (p.y - c.y), c.y + (p.x - c.x));
            assert_eq!(m4.get(q), 1.0);
        }
        assert_eq!(m0.nonzero_count(), m4.nonzero_count());
    }

    #[test]
    fn zones_partition_the_grasp() {
        for idx in 0..16 {
            let z = GraspZones::new(Pixel::new(80, 140), idx);
            let full = z.full.pixel_count();
            let parts = z.finger_a.pixel_count() + z.gap.pixel_count() + z.finger_b.pixel_count();
            assert_eq!(full, parts, "orientation {idx}");
        }
    }

    #[test]
    fn dense_round_trip() {
        let m = rasterize_push(Pixel::new(30, 200), 2.1);
        let back = ActionMask::from_dense(ActionKind::Push, &m.to_dense());
        assert_eq!(m, back);
    }
}
