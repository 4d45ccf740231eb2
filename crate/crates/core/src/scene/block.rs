use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{polygon_centroid, ConvexPolygon, Vec2};
use crate::grid::mm_to_tenths;

/// Number of sides used to approximate a cylinder footprint.
pub const CYLINDER_SIDES: usize = 16;
/// Arc segments used for a half-cylinder footprint.
pub const HALF_CYLINDER_SEGMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Cuboid,
    Cylinder,
    TriangularPrism,
    HalfCylinder,
    Polygon,
}

impl ShapeKind {
    pub fn is_round(self) -> bool {
        matches!(self, ShapeKind::Cylinder | ShapeKind::HalfCylinder)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Extruded convex prism resting on the table or on other blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub id: u32,
    pub shape: ShapeKind,
    /// Radius (m) for round shapes.
    pub radius: Option<f64>,
    /// Footprint vertices in the block frame, centered on the footprint centroid.
    local: Vec<Vec2>,
    /// Extrusion height in tenths of a millimetre.
    pub height: u16,
    /// Resting height of the underside in tenths of a millimetre.
    pub base: u16,
    pub pose: Pose,
    pub color: u8,
    pub graspable: bool,
}

impl Block {
    /// Build from arbitrary local vertices; they are re-centered on their centroid
    /// and `pose` is shifted by the same amount so the world footprint is unchanged.
    pub fn from_vertices(id: u32, shape: ShapeKind, vertices: Vec<Vec2>, height_mm: f64, pose: Pose) -> Self {
        let poly = ConvexPolygon::new(vertices);
        let mut c = polygon_centroid(poly.vertices());
        if c[0].abs() < 1e-12 && c[1].abs() < 1e-12 {
            c = [0.0, 0.0];
        }
        let local: Vec<Vec2> = poly.vertices().iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect();
        let (s, co) = pose.yaw.sin_cos();
        let pose = Pose {
            x: pose.x + co * c[0] - s * c[1],
            y: pose.y + s * c[0] + co * c[1],
            yaw: pose.yaw,
        };
        Self {
            id,
            shape,
            radius: None,
            local,
            height: mm_to_tenths(height_mm) as u16,
            base: 0,
            pose,
            color: 0,
            graspable: true,
        }
    }

    pub fn cuboid(id: u32, width_m: f64, length_m: f64, height_mm: f64, pose: Pose) -> Self {
        let (w, l) = (width_m / 2.0, length_m / 2.0);
        Self::from_vertices(
            id,
            ShapeKind::Cuboid,
            vec![[-w, -l], [w, -l], [w, l], [-w, l]],
            height_mm,
            pose,
        )
    }

    pub fn cylinder(id: u32, radius_m: f64, height_mm: f64, pose: Pose) -> Self {
        let verts = (0..CYLINDER_SIDES)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / CYLINDER_SIDES as f64;
                [radius_m * a.cos(), radius_m * a.sin()]
            })
            .collect();
        let mut b = Self::from_vertices(id, ShapeKind::Cylinder, verts, height_mm, pose);
        b.radius = Some(radius_m);
        b
    }

    /// Half disc; the pose refers to the footprint centroid.
    pub fn half_cylinder(id: u32, radius_m: f64, height_mm: f64, pose: Pose) -> Self {
        let verts: Vec<Vec2> = (0..=HALF_CYLINDER_SEGMENTS)
            .map(|k| {
                let a = PI * k as f64 / HALF_CYLINDER_SEGMENTS as f64;
                [radius_m * a.cos(), radius_m * a.sin()]
            })
            .collect();
        let c = polygon_centroid(&verts);
        let verts = verts.iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect();
        let mut b = Self::from_vertices(id, ShapeKind::HalfCylinder, verts, height_mm, pose);
        b.radius = Some(radius_m);
        b
    }

    pub fn triangular_prism(id: u32, side_m: f64, height_mm: f64, pose: Pose) -> Self {
        let r = side_m / 3f64.sqrt();
        let verts = (0..3)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 3.0 + PI / 2.0;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        Self::from_vertices(id, ShapeKind::TriangularPrism, verts, height_mm, pose)
    }

    pub fn local_vertices(&self) -> &[Vec2] {
        &self.local
    }

    pub fn footprint(&self) -> ConvexPolygon {
        let (s, c) = self.pose.yaw.sin_cos();
        ConvexPolygon::new(
            self.local
                .iter()
                .map(|p| [self.pose.x + c * p[0] - s * p[1], self.pose.y + s * p[0] + c * p[1]])
                .collect(),
        )
    }

    pub fn top(&self) -> u16 {
        self.base + self.height
    }

    pub fn height_mm(&self) -> f64 {
        self.height as f64 / 10.0
    }

    pub fn with_graspable(mut self, graspable: bool) -> Self {
        self.graspable = graspable;
        self
    }

    pub fn with_color(mut self, color: u8) -> Self {
        self.color = color;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recentered_pose_keeps_world_footprint() {
        let pose = Pose { x: 0.2, y: 0.1, yaw: 0.3 };
        let b = Block::from_vertices(
            1,
            ShapeKind::Polygon,
            vec![[0.0, 0.0], [0.04, 0.0], [0.04, 0.02], [0.0, 0.02]],
            30.0,
            pose,
        );
        let c = b.footprint().centroid();
        assert!((c[0] - b.pose.x).abs() < 1e-12 && (c[1] - b.pose.y).abs() < 1e-12);
        let (s, co) = 0.3f64.sin_cos();
        let far = [0.2 + co * 0.04 - s * 0.02, 0.1 + s * 0.04 + co * 0.02];
        assert!(b
            .footprint()
            .vertices()
            .iter()
            .any(|v| (v[0] - far[0]).abs() < 1e-12 && (v[1] - far[1]).abs() < 1e-12));
    }

    #[test]
    fn shapes_have_positive_area() {
        let p = Pose::default();
        for b in [
            Block::cuboid(0, 0.03, 0.04, 30.0, p),
            Block::cylinder(1, 0.015, 30.0, p),
            Block::half_cylinder(2, 0.02, 30.0, p),
            Block::triangular_prism(3, 0.04, 30.0, p),
        ] {
            assert!(b.footprint().area() > 0.0, "{:?}", b.shape);
            assert!(b.footprint().contains([p.x, p.y]), "{:?}", b.shape);
        }
    }
}
