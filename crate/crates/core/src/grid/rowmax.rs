use super::{Heightmap, Span, GRID_SIZE};

/// Per-row sparse table answering "max height over `[x0, x1)` in row `y`" in
/// two lookups. Rotated zones decompose into row spans, so zone maxima cost
/// two lookups per row instead of one per pixel.
#[derive(Debug, Clone)]
pub struct RowMaxTable {
    levels: Vec<Vec<u16>>,
}

impl RowMaxTable {
    pub fn new(hm: &Heightmap) -> Self {
        let n = GRID_SIZE;
        let mut levels = vec![hm.cells().to_vec()];
        let mut width = 1;
        while width * 2 <= n {
            let prev = levels.last().unwrap();
            let mut next = vec![0u16; n * n];
            for y in 0..n {
                let row = y * n;
                for x in 0..=(n - 2 * width) {
                    next[row + x] = prev[row + x].max(prev[row + x + width]);
                }
            }
            levels.push(next);
            width *= 2;
        }
        Self { levels }
    }

    /// Max over a span already clipped to the grid. Empty spans give zero.
    pub fn span_max(&self, s: &Span) -> u16 {
        let len = (s.x1 - s.x0) as usize;
        if len == 0 {
            return 0;
        }
        let k = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        let row = s.y as usize * GRID_SIZE;
        let level = &self.levels[k];
        level[row + s.x0 as usize].max(level[row + s.x1 as usize - (1 << k)])
    }

    /// Max over unclipped spans; off-grid parts read as table height 0.
    pub fn max_over(&self, spans: &[Span]) -> u16 {
        spans
            .iter()
            .filter_map(|s| s.clipped())
            .map(|s| self.span_max(&s))
            .max()
            .unwrap_or(0)
    }

    /// Max over spans shifted by `(dx, dy)`.
    pub fn max_over_shifted(&self, spans: &[Span], dx: i32, dy: i32) -> u16 {
        let mut best = 0;
        for s in spans {
            if let Some(c) = s.shifted(dx, dy).clipped() {
                best = best.max(self.span_max(&c));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Pixel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_naive_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hm = Heightmap::zeros();
        for i in 0..GRID_SIZE * GRID_SIZE {
            hm.set(Pixel::from_index(i), rng.gen_range(0..9000));
        }
        let t = RowMaxTable::new(&hm);
        for _ in 0..2000 {
            let y = rng.gen_range(0..GRID_SIZE as i32);
            let x0 = rng.gen_range(0..GRID_SIZE as i32);
            let x1 = rng.gen_range(x0..=GRID_SIZE as i32);
            let naive = (x0..x1).map(|x| hm.get(Pixel::new(x, y))).max().unwrap_or(0);
            assert_eq!(t.span_max(&Span { y, x0, x1 }), naive);
        }
    }
}
