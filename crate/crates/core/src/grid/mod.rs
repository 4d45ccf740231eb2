//! Heightmaps, pixel masks, regions of interest and action-mask rasterization.
//!
//! The grid is a 224×224 top-down view of a 0.448 m square workspace, 2 mm per
//! pixel. Pixel `(x, y)` covers the half-open square `[x, x+1) × [y, y+1)` in
//! continuous pixel coordinates; `x` is the column and `y` the row. Action
//! rectangles are anchored on pixel corners so that every pixel center sits at
//! a half-integer offset from the anchor, which keeps rasterization free of
//! boundary ties at the axis-aligned and diagonal orientations.

mod format;
mod raster;
mod rowmax;

pub use format::{
    read_action_mask, read_bitmask, read_heightmap, write_action_mask, write_bitmask,
    write_heightmap, GEHM_MAGIC, GEHM_VERSION,
};
pub use raster::{
    grasp_orientation_angle, push_start_footprint, rasterize_grasp, rasterize_push, ActionKind, ActionMask, GraspZones,
    MaskSpan, RotatedRect, Span, FINGER_ZONE_PX, GRASP_MASK_LENGTH_PX, GRASP_MASK_NONZERO,
    GRASP_ORIENTATIONS, GRIPPER_WIDTH_PX, PUSH_MASK_LENGTH_PX, PUSH_MASK_NONZERO,
    PUSH_TRAVEL_PX,
};
pub use rowmax::RowMaxTable;

use bitvec::prelude::*;

use crate::error::{Error, Result};

pub const GRID_SIZE: usize = 224;
pub const CELL_SIZE_MM: f32 = 2.0;
pub const CELL_SIZE_M: f64 = 0.002;
/// Half extent of the candidate region around the target, in pixels.
pub const ROI_HALF_EXTENT: i32 = 50;
/// Heights are stored in tenths of a millimetre.
pub const TENTHS_PER_MM: i32 = 10;
/// Exclusive upper bound on stored heights (1000 mm).
pub const MAX_HEIGHT_TENTHS: u16 = 10_000;

pub fn mm_to_tenths(mm: f64) -> i32 {
    (mm * TENTHS_PER_MM as f64).round() as i32
}

pub fn tenths_to_mm(tenths: i32) -> f64 {
    tenths as f64 / TENTHS_PER_MM as f64
}

/// Integer pixel coordinate; `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn in_bounds(self) -> bool {
        (0..GRID_SIZE as i32).contains(&self.x) && (0..GRID_SIZE as i32).contains(&self.y)
    }

    /// Row-major index; caller guarantees the pixel is in bounds.
    pub fn index(self) -> usize {
        self.y as usize * GRID_SIZE + self.x as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::new((i % GRID_SIZE) as i32, (i / GRID_SIZE) as i32)
    }

    /// Continuous coordinate of the pixel's top-left corner.
    pub fn corner(self) -> (f64, f64) {
        (self.x as f64, self.y as f64)
    }

    pub fn center(self) -> (f64, f64) {
        (self.x as f64 + 0.5, self.y as f64 + 0.5)
    }
}

/// Surface heights over the workspace, in tenths of a millimetre.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightmap {
    cells: Vec<u16>,
    cell_size_mm: f32,
    /// World coordinate (m) of the top-left corner of pixel (0, 0).
    origin: [f64; 2],
}

impl Default for Heightmap {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Heightmap {
    pub fn zeros() -> Self {
        Self {
            cells: vec![0; GRID_SIZE * GRID_SIZE],
            cell_size_mm: CELL_SIZE_MM,
            origin: [0.0, 0.0],
        }
    }

    pub fn from_tenths(cells: Vec<u16>) -> Result<Self> {
        if cells.len() != GRID_SIZE * GRID_SIZE {
            return Err(Error::InvalidArgument(format!(
                "heightmap needs {} cells, got {}",
                GRID_SIZE * GRID_SIZE,
                cells.len()
            )));
        }
        if let Some(&h) = cells.iter().find(|&&h| h >= MAX_HEIGHT_TENTHS) {
            return Err(Error::InvalidArgument(format!(
                "height {} mm out of range",
                tenths_to_mm(h as i32)
            )));
        }
        Ok(Self {
            cells,
            ..Self::zeros()
        })
    }

    pub fn cell_size_mm(&self) -> f32 {
        self.cell_size_mm
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn span_mm(&self) -> f64 {
        GRID_SIZE as f64 * self.cell_size_mm as f64
    }

    pub fn cells(&self) -> &[u16] {
        &self.cells
    }

    /// Height at `p` in tenths of a millimetre; zero outside the grid.
    pub fn get(&self, p: Pixel) -> u16 {
        if p.in_bounds() {
            self.cells[p.index()]
        } else {
            0
        }
    }

    pub fn get_mm(&self, p: Pixel) -> f64 {
        tenths_to_mm(self.get(p) as i32)
    }

    pub fn set(&mut self, p: Pixel, tenths: u16) {
        assert!(tenths < MAX_HEIGHT_TENTHS, "height out of range");
        self.cells[p.index()] = tenths;
    }

    pub fn max(&self) -> u16 {
        self.cells.iter().copied().max().unwrap_or(0)
    }

    /// Pixel holding the maximum height; lowest index wins ties.
    pub fn argmax(&self) -> Pixel {
        let mut best = 0;
        for (i, &h) in self.cells.iter().enumerate() {
            if h > self.cells[best] {
                best = i;
            }
        }
        Pixel::from_index(best)
    }

    /// Maximum height over the set pixels of `mask`, zero when the mask is empty.
    pub fn max_over(&self, mask: &BitMask) -> u16 {
        mask.iter_ones().map(|i| self.cells[i]).max().unwrap_or(0)
    }

    /// World coordinate (m) of a pixel center.
    pub fn pixel_center_world(&self, p: Pixel) -> [f64; 2] {
        pixel_center_world(p)
    }
}

/// World coordinate (m) of a pixel center, for a workspace whose pixel (0,0) corner is at the origin.
pub fn pixel_center_world(p: Pixel) -> [f64; 2] {
    [
        (p.x as f64 + 0.5) * CELL_SIZE_M,
        (p.y as f64 + 0.5) * CELL_SIZE_M,
    ]
}

/// World coordinate (m) of a continuous pixel-space point.
pub fn pixel_point_to_world(x: f64, y: f64) -> [f64; 2] {
    [x * CELL_SIZE_M, y * CELL_SIZE_M]
}

pub fn world_to_pixel_point(w: [f64; 2]) -> (f64, f64) {
    (w[0] / CELL_SIZE_M, w[1] / CELL_SIZE_M)
}

/// Boolean annotation over the grid.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMask {
    bits: BitVec<u64, Lsb0>,
}

impl std::fmt::Debug for BitMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitMask({} set)", self.count())
    }
}

impl Default for BitMask {
    fn default() -> Self {
        Self::empty()
    }
}

impl BitMask {
    pub fn empty() -> Self {
        Self {
            bits: bitvec![u64, Lsb0; 0; GRID_SIZE * GRID_SIZE],
        }
    }

    pub fn full() -> Self {
        Self {
            bits: bitvec![u64, Lsb0; 1; GRID_SIZE * GRID_SIZE],
        }
    }

    pub fn from_pixels(pixels: impl IntoIterator<Item = Pixel>) -> Self {
        let mut m = Self::empty();
        for p in pixels {
            if p.in_bounds() {
                m.set(p, true);
            }
        }
        m
    }

    pub fn get(&self, p: Pixel) -> bool {
        p.in_bounds() && self.bits[p.index()]
    }

    pub fn set(&mut self, p: Pixel, v: bool) {
        self.bits.set(p.index(), v);
    }

    pub fn set_index(&mut self, i: usize, v: bool) {
        self.bits.set(i, v);
    }

    pub fn get_index(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.bits.iter_ones().map(Pixel::from_index)
    }

    pub fn is_subset_of(&self, other: &BitMask) -> bool {
        self.bits.iter_ones().all(|i| other.bits[i])
    }

    pub fn and_not(&self, other: &BitMask) -> BitMask {
        let mut bits = self.bits.clone();
        bits &= !other.bits.clone();
        Self { bits }
    }

    pub fn or(&self, other: &BitMask) -> BitMask {
        let mut bits = self.bits.clone();
        bits |= other.bits.clone();
        Self { bits }
    }

    /// Centroid of the set pixels, rounded half-up per axis.
    pub fn centroid(&self) -> Result<Pixel> {
        let mut n: i64 = 0;
        let (mut sx, mut sy) = (0i64, 0i64);
        for p in self.pixels() {
            n += 1;
            sx += p.x as i64;
            sy += p.y as i64;
        }
        if n == 0 {
            return Err(Error::EmptyMask);
        }
        // floor(sum/n + 1/2) in exact integer arithmetic
        let round = |s: i64| (2 * s + n).div_euclid(2 * n) as i32;
        Ok(Pixel::new(round(sx), round(sy)))
    }

    /// Exact (unrounded) centroid in continuous pixel-center coordinates.
    pub fn centroid_f64(&self) -> Option<(f64, f64)> {
        let n = self.count();
        if n == 0 {
            return None;
        }
        let (mut sx, mut sy) = (0.0, 0.0);
        for p in self.pixels() {
            sx += p.x as f64 + 0.5;
            sy += p.y as f64 + 0.5;
        }
        Some((sx / n as f64, sy / n as f64))
    }

    /// Pixels within `margin` of the grid boundary that are set.
    pub fn touches_border(&self, margin: i32) -> bool {
        let hi = GRID_SIZE as i32 - margin;
        self.pixels()
            .any(|p| p.x < margin || p.y < margin || p.x >= hi || p.y >= hi)
    }
}

/// Square window around a pixel, clipped to the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub center: Pixel,
    pub half_extent: i32,
    pub x0: i32,
    pub y0: i32,
    /// Exclusive.
    pub x1: i32,
    /// Exclusive.
    pub y1: i32,
}

impl Region {
    pub fn around(center: Pixel, half_extent: i32) -> Self {
        let n = GRID_SIZE as i32;
        Self {
            center,
            half_extent,
            x0: (center.x - half_extent).clamp(0, n),
            y0: (center.y - half_extent).clamp(0, n),
            x1: (center.x + half_extent).clamp(0, n),
            y1: (center.y + half_extent).clamp(0, n),
        }
    }

    pub fn width(&self) -> i32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> i32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> usize {
        (self.width().max(0) * self.height().max(0)) as usize
    }

    pub fn contains(&self, p: Pixel) -> bool {
        (self.x0..self.x1).contains(&p.x) && (self.y0..self.y1).contains(&p.y)
    }

    /// Row-major pixel iterator.
    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| Pixel::new(x, y)))
    }
}

/// Region of interest around the target: centered on its rounded centroid.
pub fn roi_of_target(mask: &BitMask) -> Result<Region> {
    Ok(Region::around(mask.centroid()?, ROI_HALF_EXTENT))
}

/// Morphological dilation with a Euclidean disc of radius `radius_px`
/// (offsets with `dx² + dy² ≤ r²`; five pixels at `r = 1`).
pub fn dilate(mask: &BitMask, radius_px: i32) -> BitMask {
    assert!(radius_px >= 1, "dilation radius must be positive");
    let r = radius_px;
    let half_widths: Vec<i32> = (-r..=r)
        .map(|dy| ((r * r - dy * dy) as f64).sqrt().floor() as i32)
        .collect();
    let n = GRID_SIZE as i32;
    let mut out = BitMask::empty();
    for p in mask.pixels() {
        for (k, dy) in (-r..=r).enumerate() {
            let y = p.y + dy;
            if !(0..n).contains(&y) {
                continue;
            }
            let w = half_widths[k];
            let xa = (p.x - w).max(0);
            let xb = (p.x + w).min(n - 1);
            let row = y as usize * GRID_SIZE;
            out.bits[row + xa as usize..=row + xb as usize].fill(true);
        }
    }
    out
}

/// Ring of pixels added by dilating `mask`.
pub fn border_mask(mask: &BitMask, radius_px: i32) -> BitMask {
    dilate(mask, radius_px).and_not(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roi_of_singleton() {
        let m = BitMask::from_pixels([Pixel::new(112, 112)]);
        let r = roi_of_target(&m).unwrap();
        assert_eq!(r.center, Pixel::new(112, 112));
        assert_eq!((r.width(), r.height()), (100, 100));
    }

    #[test]
    fn roi_clipped_at_corner() {
        let m = BitMask::from_pixels([Pixel::new(10, 10), Pixel::new(30, 30)]);
        let r = roi_of_target(&m).unwrap();
        assert_eq!(r.center, Pixel::new(20, 20));
        // x: [-30, 70) clipped to [0, 70)
        assert_eq!((r.x0, r.y0, r.x1, r.y1), (0, 0, 70, 70));
        assert_eq!(r.area(), 70 * 70);
    }

    #[test]
    fn roi_full_grid_rounds_half_up() {
        // mean index 111.5 rounds up
        let r = roi_of_target(&BitMask::full()).unwrap();
        assert_eq!(r.center, Pixel::new(112, 112));
        assert_eq!(r.half_extent, 50);
    }

    #[test]
    fn roi_empty_mask_errors() {
        assert!(matches!(roi_of_target(&BitMask::empty()), Err(Error::EmptyMask)));
    }

    #[test]
    fn dilate_unit_disc() {
        let m = BitMask::from_pixels([Pixel::new(50, 50)]);
        let d = dilate(&m, 1);
        assert_eq!(d.count(), 5);
        assert!(d.get(Pixel::new(51, 50)) && !d.get(Pixel::new(51, 51)));
    }

    #[test]
    fn dilate_empty_is_empty() {
        assert!(dilate(&BitMask::empty(), 4).is_empty());
    }

    #[test]
    fn dilate_square_grows() {
        let sq = BitMask::from_pixels(
            (100..110).flat_map(|y| (100..110).map(move |x| Pixel::new(x, y))),
        );
        let d = dilate(&sq, 3);
        // brute force: every pixel within Euclidean distance 3 of some square pixel
        let mut expected = 0;
        for y in 90..120 {
            for x in 90..120 {
                let hit = sq.pixels().any(|p| {
                    let (dx, dy) = (p.x - x, p.y - y);
                    dx * dx + dy * dy <= 9
                });
                if hit {
                    expected += 1;
                    assert!(d.get(Pixel::new(x, y)));
                }
            }
        }
        assert_eq!(d.count(), expected);
        assert!(sq.is_subset_of(&d) && d.count() > sq.count());
    }

    #[test]
    fn dilate_clips_at_edges() {
        let m = BitMask::from_pixels([Pixel::new(0, 0)]);
        assert_eq!(dilate(&m, 1).count(), 3);
    }

    #[test]
    fn heightmap_rejects_out_of_range() {
        let mut cells = vec![0u16; GRID_SIZE * GRID_SIZE];
        cells[7] = MAX_HEIGHT_TENTHS;
        assert!(Heightmap::from_tenths(cells).is_err());
        assert!((Heightmap::zeros().span_mm() - 448.0).abs() < 1e-12);
    }
}
