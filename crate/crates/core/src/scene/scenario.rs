//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "corridor",
//!   "blocks": [
//!     { "shape": "cuboid", "vertices": [[-0.01, -0.04], [0.01, -0.04], [0.01, 0.04], [-0.01, 0.04]],
//!       "height_mm": 40, "pose": { "x": 0.224, "y": 0.224, "yaw": 0.0 },
//!       "graspable": true, "target": true },
//!     { "shape": "cylinder", "radius": 0.015, "height_mm": 35,
//!       "pose": { "x": 0.26, "y": 0.2, "yaw": 0.0 }, "graspable": true, "target": false }
//!   ]
//! }
//! ```
//!
//! Vertices are in metres in the block frame; round shapes take a radius
//! instead. Blocks are dropped in file order and ids default to the position
//! in the list. Exactly one block must be the target.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Block, Pose, Scene, ShapeKind, WORKSPACE_M};
use crate::error::{Error, Result};
use crate::geometry::{signed_area, Vec2};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    seed: u64,
    blocks: Vec<BlockSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(try_from = "RawBlock")]
struct BlockSpec(RawBlock);

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<u32>,
    shape: ShapeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<Vec2>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    height_mm: f64,
    pose: Pose,
    #[serde(default = "yes")]
    graspable: bool,
    #[serde(default)]
    target: bool,
    #[serde(default)]
    color: u8,
}

fn yes() -> bool {
    true
}

impl TryFrom<RawBlock> for BlockSpec {
    type Error = String;

    fn try_from(raw: RawBlock) -> Result<Self, String> {
        if !(10.0..=120.0).contains(&raw.height_mm) {
            return Err(format!("`height_mm` {} outside [10, 120]", raw.height_mm));
        }
        let p = raw.pose;
        if !(p.x.is_finite() && p.y.is_finite() && p.yaw.is_finite())
            || !(0.0..=WORKSPACE_M).contains(&p.x)
            || !(0.0..=WORKSPACE_M).contains(&p.y)
        {
            return Err("`pose` must be finite and inside the workspace".into());
        }
        if raw.shape.is_round() {
            match raw.radius {
                Some(r) if r > 0.0 && r.is_finite() => {}
                _ => return Err(format!("`radius` must be positive for {:?}", raw.shape)),
            }
        } else {
            let Some(v) = &raw.vertices else {
                return Err(format!("`vertices` required for {:?}", raw.shape));
            };
            if v.len() < 3 || !v.iter().flatten().all(|c| c.is_finite()) {
                return Err("`vertices` needs at least three finite points".into());
            }
            if signed_area(v).abs() < 1e-10 || !is_convex(v) {
                return Err("`vertices` must form a convex polygon with positive area".into());
            }
        }
        Ok(BlockSpec(raw))
    }
}

fn is_convex(v: &[Vec2]) -> bool {
    let n = v.len();
    let mut sign = 0.0f64;
    for i in 0..n {
        let (a, b, c) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
        let z = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if z.abs() < 1e-15 {
            continue;
        }
        if sign == 0.0 {
            sign = z.signum();
        } else if z.signum() != sign {
            return false;
        }
    }
    true
}

impl RawBlock {
    fn build(&self, id: u32) -> Block {
        let r = self.radius.unwrap_or(0.0);
        let block = match self.shape {
            ShapeKind::Cylinder => Block::cylinder(id, r, self.height_mm, self.pose),
            ShapeKind::HalfCylinder => Block::half_cylinder(id, r, self.height_mm, self.pose),
            shape => Block::from_vertices(
                id,
                shape,
                self.vertices.clone().unwrap_or_default(),
                self.height_mm,
                self.pose,
            ),
        };
        block.with_graspable(self.graspable).with_color(self.color)
    }

    fn from_block(b: &Block, target: bool) -> Self {
        Self {
            id: Some(b.id),
            shape: b.shape,
            vertices: (!b.shape.is_round()).then(|| b.local_vertices().to_vec()),
            radius: b.radius,
            height_mm: b.height_mm(),
            pose: b.pose,
            graspable: b.graspable,
            target,
            color: b.color,
        }
    }
}

fn field_of(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map(str::to_owned)
        .unwrap_or_else(|| "document".into())
}

/// Parse a scenario; `path` only labels diagnostics.
pub fn scenario_from_json(text: &str, path: &str) -> Result<Scene> {
    let parse_err = |line: usize, field: String, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        field,
        message,
    };
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_owned();
        parse_err(e.line(), field_of(&msg), msg)
    })?;
    if file.blocks.is_empty() {
        return Err(parse_err(1, "blocks".into(), "scenario has no blocks".into()));
    }
    let targets: Vec<usize> = (0..file.blocks.len()).filter(|&i| file.blocks[i].0.target).collect();
    if targets.len() != 1 {
        return Err(parse_err(
            1,
            "target".into(),
            format!("expected exactly one target block, found {}", targets.len()),
        ));
    }
    let blocks: Vec<Block> = file
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| b.0.build(b.0.id.unwrap_or(i as u32)))
        .collect();
    let target_id = blocks[targets[0]].id;
    Scene::dropped(blocks, target_id, file.seed).map_err(|e| match e {
        Error::InvalidArgument(m) => parse_err(1, "id".into(), m),
        other => other,
    })
}

pub fn scenario_to_json(scene: &Scene, name: Option<&str>) -> String {
    let file = ScenarioFile {
        name: name.map(str::to_owned),
        seed: scene.rng_seed,
        blocks: scene
            .blocks
            .iter()
            .map(|b| BlockSpec(RawBlock::from_block(b, b.id == scene.target_id)))
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    scenario_from_json(&text, &path.display().to_string())
}

pub fn save_scenario(scene: &Scene, path: impl AsRef<Path>, name: Option<&str>) -> Result<()> {
    fs::write(path, scenario_to_json(scene, name) + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::spawn_random_clutter;

    const SAMPLE: &str = r#"{
  "name": "pair",
  "blocks": [
    { "shape": "cuboid", "vertices": [[-0.01, -0.02], [0.01, -0.02], [0.01, 0.02], [-0.01, 0.02]],
      "height_mm": 40, "pose": { "x": 0.224, "y": 0.224, "yaw": 0.3 }, "target": true },
    { "shape": "cylinder", "radius": 0.015, "height_mm": 35,
      "pose": { "x": 0.27, "y": 0.2, "yaw": 0.0 }, "graspable": false }
  ]
}"#;

    #[test]
    fn loads_sample() {
        let s = scenario_from_json(SAMPLE, "sample.json").unwrap();
        assert_eq!(s.blocks.len(), 2);
        assert_eq!(s.target_id, 0);
        assert!(!s.blocks[1].graspable);
        assert_eq!(s.blocks[1].radius, Some(0.015));
        assert_eq!(s.blocks[0].height, 400);
    }

    #[test]
    fn empty_file_is_parse_error() {
        match scenario_from_json("", "empty.json") {
            Err(Error::Parse { path, .. }) => assert_eq!(path, "empty.json"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reports_line_and_field() {
        let bad = SAMPLE.replace(r#""radius": 0.015, "#, "");
        match scenario_from_json(&bad, "x.json") {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(field, "radius");
                assert!(line >= 6, "{line}");
            }
            other => panic!("{other:?}"),
        }
        let bad = SAMPLE.replace("\"height_mm\": 40", "\"height_mm\": 4");
        assert!(matches!(
            scenario_from_json(&bad, "x.json"),
            Err(Error::Parse { ref field, .. }) if field == "height_mm"
        ));
        let bad = SAMPLE.replace("\"target\": true", "\"target\": false");
        assert!(matches!(
            scenario_from_json(&bad, "x.json"),
            Err(Error::Parse { ref field, .. }) if field == "target"
        ));
        let bad = SAMPLE.replace("\"graspable\": false", "\"grasp\": false");
        assert!(matches!(
            scenario_from_json(&bad, "x.json"),
            Err(Error::Parse { ref field, .. }) if field == "grasp"
        ));
    }

    #[test]
    fn rejects_concave_vertices() {
        let bad = SAMPLE.replace(
            "[[-0.01, -0.02], [0.01, -0.02], [0.01, 0.02], [-0.01, 0.02]]",
            "[[-0.01, -0.02], [0.01, -0.02], [0.0, -0.01], [0.01, 0.02], [-0.01, 0.02]]",
        );
        assert!(matches!(
            scenario_from_json(&bad, "x.json"),
            Err(Error::Parse { ref field, .. }) if field == "vertices"
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        for seed in 0..10 {
            let s = spawn_random_clutter(15, seed).unwrap();
            let back = scenario_from_json(&scenario_to_json(&s, Some("r")), "r.json").unwrap();
            assert_eq!(back, s);
        }
        let s = scenario_from_json(SAMPLE, "sample.json").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        save_scenario(&s, &p, None).unwrap();
        assert_eq!(load_scenario(&p).unwrap(), s);
    }
}
