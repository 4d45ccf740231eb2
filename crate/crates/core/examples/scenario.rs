//! Build a scene by hand, save it as JSON and load it back.
//!
//! `cargo run --example scenario`

use clutter_grasp::scene::{scenario_from_json, scenario_to_json, Block, Pose, Scene};

fn main() -> clutter_grasp::Result<()> {
    let at = |x, y| Pose { x, y, yaw: 0.0 };
    let blocks = vec![
        Block::cuboid(0, 0.03, 0.03, 40.0, at(0.224, 0.224)),
        Block::cylinder(1, 0.015, 50.0, at(0.26, 0.224)),
        Block::triangular_prism(2, 0.04, 35.0, at(0.19, 0.25)),
        Block::cuboid(3, 0.02, 0.06, 20.0, at(0.26, 0.23)),
    ];
    let scene = Scene::dropped(blocks, 0, 0)?;
    let text = scenario_to_json(&scene, Some("hand_built"));
    println!("{text}");
    let back = scenario_from_json(&text, "<memory>")?;
    println!("round trip identical: {}", back.hash_hex() == scene.hash_hex());
    for b in &back.blocks {
        println!("block {} top {:.1} mm", b.id, b.top() as f64 / 10.0);
    }
    Ok(())
}
