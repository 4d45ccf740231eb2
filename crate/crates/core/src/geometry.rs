//! Planar convex polygons in world coordinates (metres).

pub type Vec2 = [f64; 2];

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    pts: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Vertices in either winding; stored counter-clockwise.
    pub fn new(mut pts: Vec<Vec2>) -> Self {
        assert!(pts.len() >= 3, "polygon needs at least three vertices");
        if signed_area(&pts) < 0.0 {
            pts.reverse();
        }
        Self { pts }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.pts
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.pts)
    }

    pub fn centroid(&self) -> Vec2 {
        polygon_centroid(&self.pts)
    }

    pub fn translated(&self, d: Vec2) -> Self {
        Self {
            pts: self.pts.iter().map(|p| [p[0] + d[0], p[1] + d[1]]).collect(),
        }
    }

    /// Strict interior test.
    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.pts.len();
        (0..n).all(|i| {
            let a = self.pts[i];
            let b = self.pts[(i + 1) % n];
            cross(sub(b, a), sub(p, a)) > 0.0
        })
    }

    /// Interior-or-boundary test with an absolute tolerance on the edge distance.
    pub fn contains_closed(&self, p: Vec2, tol: f64) -> bool {
        let n = self.pts.len();
        (0..n).all(|i| {
            let a = self.pts[i];
            let b = self.pts[(i + 1) % n];
            let e = sub(b, a);
            cross(e, sub(p, a)) >= -tol * dot(e, e).sqrt()
        })
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    fn project(&self, axis: Vec2) -> (f64, f64) {
        self.pts
            .iter()
            .map(|&p| dot(p, axis))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }

    fn normals(&self) -> impl Iterator<Item = Vec2> + '_ {
        let n = self.pts.len();
        (0..n).filter_map(move |i| {
            let e = sub(self.pts[(i + 1) % n], self.pts[i]);
            let len = dot(e, e).sqrt();
            (len > 0.0).then(|| [e[1] / len, -e[0] / len])
        })
    }

    /// Minimum overlap along all separating-axis candidates; zero when disjoint.
    pub fn penetration(&self, other: &ConvexPolygon) -> f64 {
        let mut best = f64::INFINITY;
        for axis in self.normals().chain(other.normals()) {
            let (a0, a1) = self.project(axis);
            let (b0, b1) = other.project(axis);
            let overlap = a1.min(b1) - a0.max(b0);
            if overlap <= 0.0 {
                return 0.0;
            }
            best = best.min(overlap);
        }
        best
    }

    /// Interval of travel `s` along unit direction `dir` over which
    /// `self + s·dir` overlaps `other` with positive area, or `None`.
    pub fn sweep_contact(&self, dir: Vec2, other: &ConvexPolygon) -> Option<(f64, f64)> {
        let mut s0 = f64::NEG_INFINITY;
        let mut s1 = f64::INFINITY;
        for axis in self.normals().chain(other.normals()) {
            let (a0, a1) = self.project(axis);
            let (b0, b1) = other.project(axis);
            let k = dot(dir, axis);
            if k.abs() < 1e-12 {
                if a0 >= b1 || a1 <= b0 {
                    return None;
                }
                continue;
            }
            let (mut lo, mut hi) = ((b0 - a1) / k, (b1 - a0) / k);
            if lo > hi {
                std::mem::swap(&mut lo, &mut hi);
            }
            s0 = s0.max(lo);
            s1 = s1.min(hi);
            if s0 >= s1 {
                return None;
            }
        }
        Some((s0, s1))
    }
}

pub fn signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| cross(pts[i], pts[(i + 1) % n])).sum::<f64>()
}

pub fn polygon_centroid(pts: &[Vec2]) -> Vec2 {
    let n = pts.len();
    let a = signed_area(pts);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let c = cross(p, q);
        cx += (p[0] + q[0]) * c;
        cy += (p[1] + q[1]) * c;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: f64, y: f64, s: f64) -> ConvexPolygon {
        ConvexPolygon::new(vec![[x, y], [x + s, y], [x + s, y + s], [x, y + s]])
    }

    #[test]
    fn winding_and_area() {
        let cw = ConvexPolygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]);
        assert!((cw.area() - 1.0).abs() < 1e-12);
        assert_eq!(cw.centroid(), [0.5, 0.5]);
        assert!(cw.contains([0.5, 0.5]) && !cw.contains([1.0, 0.5]));
        assert!(cw.contains_closed([1.0, 0.5], 1e-12));
    }

    #[test]
    fn penetration_depth() {
        let a = square(0.0, 0.0, 1.0);
        assert!((a.penetration(&square(0.75, 0.0, 1.0)) - 0.25).abs() < 1e-12);
        assert_eq!(a.penetration(&square(1.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn sweep_hits_block_ahead() {
        let a = square(0.0, 0.0, 1.0);
        let b = square(3.0, 0.5, 1.0);
        let (s0, s1) = a.sweep_contact([1.0, 0.0], &b).unwrap();
        assert!((s0 - 2.0).abs() < 1e-12 && (s1 - 4.0).abs() < 1e-12);
        assert!(a.sweep_contact([0.0, 1.0], &b).is_none());
        assert!(a.sweep_contact([1.0, 0.0], &square(3.0, 1.0, 1.0)).is_none());
    }
}
