//! Fixed-length candidate encoding.
//!
//! A 100×100 px window centered on the target centroid (zero outside the grid)
//! is area-averaged down to 16×16 bins for three channels: heightmap scaled
//! by 300 mm, target mask, and action mask. Six scalars follow, all computed
//! from the same three grids so stored samples and live candidates encode
//! identically.

use crate::error::{Error, Result};
use crate::grid::{
    border_mask, ActionKind, ActionMask, BitMask, Heightmap, Pixel, GRID_SIZE, ROI_HALF_EXTENT,
};

pub const BINS: usize = 16;
pub const CHANNEL_LEN: usize = BINS * BINS;
pub const N_SCALARS: usize = 6;
pub const FEATURE_LEN: usize = 3 * CHANNEL_LEN + N_SCALARS;

pub const HEIGHT_SCALE_TENTHS: f64 = 3000.0;
pub const BORDER_RADIUS_PX: i32 = 10;
/// Border pixels above this height (tenths of mm) count as occupied.
pub const GROUND_TENTHS: u16 = 50;
/// Target pixel count that maps to a visible ratio of 1.
pub const VISIBLE_REFERENCE_PX: f64 = 400.0;
pub const FEATURE_MIN: f64 = -1.0;
pub const FEATURE_MAX: f64 = 2.0;

const WINDOW: i32 = 2 * ROI_HALF_EXTENT;
const BIN_PX: f64 = WINDOW as f64 / BINS as f64;
const PUSH_MARGIN_TENTHS: i32 = 150;
const GRASP_MARGIN_TENTHS: i32 = 250;

pub const SCALAR_KIND: usize = 3 * CHANNEL_LEN;
pub const SCALAR_ON_TARGET: usize = SCALAR_KIND + 1;
pub const SCALAR_DISTANCE: usize = SCALAR_KIND + 2;
pub const SCALAR_MARGIN: usize = SCALAR_KIND + 3;
pub const SCALAR_BORDER: usize = SCALAR_KIND + 4;
pub const SCALAR_VISIBLE: usize = SCALAR_KIND + 5;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn kind(&self) -> ActionKind {
        if self.0[SCALAR_KIND] > 0.5 {
            ActionKind::Grasp
        } else {
            ActionKind::Push
        }
    }

    pub fn on_target(&self) -> bool {
        self.0[SCALAR_ON_TARGET] > 0.5
    }

    pub fn margin_mm(&self) -> f64 {
        self.0[SCALAR_MARGIN] * 100.0
    }

    pub fn distance_px(&self) -> f64 {
        self.0[SCALAR_DISTANCE] * 100.0
    }

    pub fn height_channel(&self) -> &[f64] {
        &self.0[..CHANNEL_LEN]
    }

    pub fn target_channel(&self) -> &[f64] {
        &self.0[CHANNEL_LEN..2 * CHANNEL_LEN]
    }

    pub fn action_channel(&self) -> &[f64] {
        &self.0[2 * CHANNEL_LEN..3 * CHANNEL_LEN]
    }
}

/// Occupancy of the ring around the target.
#[derive(Debug, Clone, PartialEq)]
pub struct BorderStats {
    pub border_mask: BitMask,
    /// Ring pixels above [`GROUND_TENTHS`].
    pub occupancy: usize,
}

impl BorderStats {
    pub fn new(hm: &Heightmap, tmask: &BitMask) -> Self {
        let border_mask = border_mask(tmask, BORDER_RADIUS_PX);
        let occupancy = border_mask
            .iter_ones()
            .filter(|&i| hm.cells()[i] > GROUND_TENTHS)
            .count();
        Self {
            border_mask,
            occupancy,
        }
    }

    pub fn ratio(&self) -> f64 {
        let n = self.border_mask.count();
        if n == 0 {
            0.0
        } else {
            self.occupancy as f64 / n as f64
        }
    }
}

/// Overlap of window pixel offset `i` with at most two bins.
fn bin_weights() -> [(usize, f64, usize, f64); WINDOW as usize] {
    let mut out = [(0, 0.0, 0, 0.0); WINDOW as usize];
    for (i, slot) in out.iter_mut().enumerate() {
        let lo = i as f64;
        let b0 = (lo / BIN_PX).floor() as usize;
        let edge = (b0 + 1) as f64 * BIN_PX;
        *slot = if lo + 1.0 > edge && b0 + 1 < BINS {
            (b0, edge - lo, b0 + 1, lo + 1.0 - edge)
        } else {
            (b0, 1.0, b0, 0.0)
        };
    }
    out
}

/// Area-mean of `value` over each bin; pixels are given relative to the window origin.
struct Downsampler {
    weights: [(usize, f64, usize, f64); WINDOW as usize],
    origin: (i32, i32),
}

impl Downsampler {
    fn new(center: Pixel) -> Self {
        Self {
            weights: bin_weights(),
            origin: (center.x - ROI_HALF_EXTENT, center.y - ROI_HALF_EXTENT),
        }
    }

    fn add(&self, out: &mut [f64], p: Pixel, v: f64) {
        let i = p.x - self.origin.0;
        let j = p.y - self.origin.1;
        if !(0..WINDOW).contains(&i) || !(0..WINDOW).contains(&j) {
            return;
        }
        let (xa, wxa, xb, wxb) = self.weights[i as usize];
        let (ya, wya, yb, wyb) = self.weights[j as usize];
        out[ya * BINS + xa] += v * wxa * wya;
        if wxb > 0.0 {
            out[ya * BINS + xb] += v * wxb * wya;
        }
        if wyb > 0.0 {
            out[yb * BINS + xa] += v * wxa * wyb;
            if wxb > 0.0 {
                out[yb * BINS + xb] += v * wxb * wyb;
            }
        }
    }

    fn window_pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        let n = GRID_SIZE as i32;
        let (x0, y0) = self.origin;
        (y0.max(0)..(y0 + WINDOW).min(n))
            .flat_map(move |y| (x0.max(0)..(x0 + WINDOW).min(n)).map(move |x| Pixel::new(x, y)))
    }

    fn finish(out: &mut [f64]) {
        let area = BIN_PX * BIN_PX;
        for v in out {
            *v /= area;
        }
    }
}

/// Per-observation part of the encoding, shared by all candidates of one step.
#[derive(Debug, Clone)]
pub struct FeatureContext {
    center: Pixel,
    centroid: (f64, f64),
    target_max: i32,
    height: Vec<f64>,
    target: Vec<f64>,
    border_ratio: f64,
    visible_ratio: f64,
}

impl FeatureContext {
    pub fn new(hm: &Heightmap, tmask: &BitMask) -> Result<Self> {
        let center = tmask.centroid()?;
        let centroid = tmask.centroid_f64().ok_or(Error::EmptyMask)?;
        let ds = Downsampler::new(center);
        let mut height = vec![0.0; CHANNEL_LEN];
        let mut target = vec![0.0; CHANNEL_LEN];
        for p in ds.window_pixels() {
            let h = hm.get(p);
            if h > 0 {
                ds.add(&mut height, p, h as f64 / HEIGHT_SCALE_TENTHS);
            }
            if tmask.get(p) {
                ds.add(&mut target, p, 1.0);
            }
        }
        Downsampler::finish(&mut height);
        Downsampler::finish(&mut target);
        Ok(Self {
            center,
            centroid,
            target_max: hm.max_over(tmask) as i32,
            height,
            target,
            border_ratio: BorderStats::new(hm, tmask).ratio(),
            visible_ratio: tmask.count() as f64 / VISIBLE_REFERENCE_PX,
        })
    }

    pub fn encode(&self, hm: &Heightmap, tmask: &BitMask, mask: &ActionMask) -> FeatureVector {
        let ds = Downsampler::new(self.center);
        let mut action = vec![0.0; CHANNEL_LEN];
        for (p, v) in mask.iter() {
            ds.add(&mut action, p, v as f64);
        }
        Downsampler::finish(&mut action);

        let mut f = Vec::with_capacity(FEATURE_LEN);
        f.extend_from_slice(&self.height);
        f.extend_from_slice(&self.target);
        f.extend_from_slice(&action);

        let kind = mask.kind();
        let mean = mask_mean(mask);
        let (mx, my) = mean.unwrap_or(self.centroid);
        let on_target = kind == ActionKind::Grasp
            && mean
                .map(|(x, y)| round_pixel(x, y))
                .is_some_and(|p| p.in_bounds() && tmask.get(p));
        let distance = ((mx - self.centroid.0).powi(2) + (my - self.centroid.1).powi(2)).sqrt();
        let margin = match kind {
            ActionKind::Grasp => grasp_margin(hm, mask),
            ActionKind::Push => push_margin(hm, mask, self.target_max),
        };
        f.push(if kind == ActionKind::Grasp { 1.0 } else { 0.0 });
        f.push(on_target as u8 as f64);
        f.push(distance / 100.0);
        f.push(margin as f64 / 1000.0);
        f.push(self.border_ratio);
        f.push(self.visible_ratio);
        for v in &mut f {
            *v = v.clamp(FEATURE_MIN, FEATURE_MAX);
        }
        FeatureVector(f)
    }
}

/// Encode one candidate. Fails only when the target mask is empty.
pub fn extract_features(hm: &Heightmap, tmask: &BitMask, mask: &ActionMask) -> Result<FeatureVector> {
    Ok(FeatureContext::new(hm, tmask)?.encode(hm, tmask, mask))
}

/// Mean of nonzero pixel centers; for an unclipped mask this is its anchor corner.
fn mask_mean(mask: &ActionMask) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (p, _) in mask.iter() {
        sx += p.x as f64 + 0.5;
        sy += p.y as f64 + 0.5;
        n += 1;
    }
    (n > 0).then(|| (sx / n as f64, sy / n as f64))
}

/// Pixel whose corner is nearest to `(x, y)`, rounding half up.
fn round_pixel(x: f64, y: f64) -> Pixel {
    Pixel::new((x + 0.5).floor() as i32, (y + 0.5).floor() as i32)
}

fn region_mean(mask: &ActionMask, value: f32) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (p, v) in mask.iter() {
        if v == value {
            sx += p.x as f64 + 0.5;
            sy += p.y as f64 + 0.5;
            n += 1;
        }
    }
    (n > 0).then(|| (sx / n as f64, sy / n as f64))
}

/// Grasp SCT margin recovered from the mask: source pixel at the mask mean,
/// closing axis along the principal direction of the mask pixels.
fn grasp_margin(hm: &Heightmap, mask: &ActionMask) -> i32 {
    let Some((mx, my)) = mask_mean(mask) else {
        return -GRASP_MARGIN_TENTHS;
    };
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (p, _) in mask.iter() {
        let dx = p.x as f64 + 0.5 - mx;
        let dy = p.y as f64 + 0.5 - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (s, c) = theta.sin_cos();
    let mut finger = 0i32;
    for (p, _) in mask.iter() {
        let u = (p.x as f64 + 0.5 - mx) * c + (p.y as f64 + 0.5 - my) * s;
        if u.abs() >= 18.0 {
            finger = finger.max(hm.get(p) as i32);
        }
    }
    let src = round_pixel(mx, my);
    hm.get(src) as i32 - finger - GRASP_MARGIN_TENTHS
}

/// Push SCT margin recovered from the mask: route axis from the 0.5 half to
/// the 1.0 half, start footprint = first 12 px of the route.
fn push_margin(hm: &Heightmap, mask: &ActionMask, target_max: i32) -> i32 {
    let near = region_mean(mask, 0.5);
    let far = region_mean(mask, 1.0);
    let foot = match (near, far) {
        (Some(a), Some(b)) if (b.0 - a.0).hypot(b.1 - a.1) > 1e-9 => {
            let len = (b.0 - a.0).hypot(b.1 - a.1);
            let e = ((b.0 - a.0) / len, (b.1 - a.1) / len);
            let along = |p: Pixel| (p.x as f64 + 0.5 - a.0) * e.0 + (p.y as f64 + 0.5 - a.1) * e.1;
            let smin = mask
                .iter()
                .filter(|&(_, v)| v == 0.5)
                .map(|(p, _)| along(p))
                .fold(f64::INFINITY, f64::min);
            mask.iter()
                .filter(|&(p, v)| v == 0.5 && along(p) < smin + 12.0)
                .map(|(p, _)| hm.get(p) as i32)
                .max()
                .unwrap_or(0)
        }
        _ => mask.iter().map(|(p, _)| hm.get(p) as i32).max().unwrap_or(0),
    };
    target_max - foot - PUSH_MARGIN_TENTHS
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize_grasp, rasterize_push};

    fn rect_hm(x0: i32, y0: i32, w: i32, h: i32, t: u16) -> (Heightmap, BitMask) {
        let mut hm = Heightmap::zeros();
        let mut m = BitMask::empty();
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                hm.set(Pixel::new(x, y), t);
                m.set(Pixel::new(x, y), true);
            }
        }
        (hm, m)
    }

    #[test]
    fn bins_partition_the_window() {
        let w = bin_weights();
        let mut per_bin = [0.0; BINS];
        for &(a, wa, b, wb) in &w {
            per_bin[a] += wa;
            per_bin[b] += wb;
        }
        assert!(per_bin.iter().all(|&s| s == BIN_PX));
    }

    #[test]
    fn features_are_bounded_and_sized() {
        let (hm, t) = rect_hm(105, 105, 14, 14, 400);
        let f = extract_features(&hm, &t, &rasterize_grasp(Pixel::new(112, 112), 3)).unwrap();
        assert_eq!(f.0.len(), FEATURE_LEN);
        assert!(f.0.iter().all(|v| v.is_finite() && (-1.0..=2.0).contains(v)));
        assert_eq!(f.kind(), ActionKind::Grasp);
        assert!(f.on_target());
        assert!((f.margin_mm() - 15.0).abs() < 1e-9);
        // target channel integrates to the target area
        let area: f64 = f.target_channel().iter().sum::<f64>() * BIN_PX * BIN_PX;
        assert!((area - 196.0).abs() < 1e-9);
        let a: f64 = f.action_channel().iter().sum::<f64>() * BIN_PX * BIN_PX;
        let n = rasterize_grasp(Pixel::new(112, 112), 3).nonzero_count() as f64;
        assert!((a - n).abs() < 1e-9, "{a} {n}");
    }

    #[test]
    fn push_scalars() {
        let (hm, t) = rect_hm(105, 105, 14, 14, 400);
        let f = extract_features(&hm, &t, &rasterize_push(Pixel::new(70, 112), 0.0)).unwrap();
        assert_eq!(f.kind(), ActionKind::Push);
        assert!(!f.on_target());
        assert!((f.margin_mm() - 25.0).abs() < 1e-9);
        // route centered 31 px ahead of the start corner
        assert!((f.distance_px() - 11.0).abs() < 1e-9, "{}", f.distance_px());
        let on = extract_features(&hm, &t, &rasterize_push(Pixel::new(100, 112), 0.0)).unwrap();
        assert!((on.margin_mm() + 15.0).abs() < 1e-9);
    }

    #[test]
    fn off_target_grasp_flag() {
        let (hm, t) = rect_hm(105, 105, 14, 14, 400);
        let f = extract_features(&hm, &t, &rasterize_grasp(Pixel::new(140, 112), 0)).unwrap();
        assert!(!f.on_target());
        assert!(f.margin_mm() < 0.0);
    }

    #[test]
    fn translation_consistency() {
        let (hm, t) = rect_hm(95, 100, 14, 20, 400);
        let m = rasterize_push(Pixel::new(70, 108), 0.3);
        let base = extract_features(&hm, &t, &m).unwrap();
        for (dx, dy) in [(25, 0), (0, 25), (13, -7), (-20, 31)] {
            let (hm2, t2) = rect_hm(95 + dx, 100 + dy, 14, 20, 400);
            let m2 = rasterize_push(Pixel::new(70 + dx, 108 + dy), 0.3);
            let f = extract_features(&hm2, &t2, &m2).unwrap();
            assert_eq!(&f.0[..3 * CHANNEL_LEN], &base.0[..3 * CHANNEL_LEN]);
            for k in 3 * CHANNEL_LEN..FEATURE_LEN {
                assert!((f.0[k] - base.0[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn border_stats_count_ring() {
        let (mut hm, t) = rect_hm(100, 100, 10, 10, 400);
        let empty = BorderStats::new(&hm, &t);
        assert_eq!(empty.occupancy, 0);
        assert!(empty.border_mask.count() > 0);
        for y in 100..110 {
            hm.set(Pixel::new(112, y), 60);
            hm.set(Pixel::new(113, y), 40);
        }
        let s = BorderStats::new(&hm, &t);
        assert_eq!(s.occupancy, 10);
        assert!(s.occupancy <= s.border_mask.count());
    }

    #[test]
    fn empty_target_is_an_error() {
        let hm = Heightmap::zeros();
        let m = rasterize_grasp(Pixel::new(50, 50), 0);
        assert!(matches!(extract_features(&hm, &BitMask::empty(), &m), Err(Error::EmptyMask)));
    }
}
