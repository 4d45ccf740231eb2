//! Spawn random clutter, push next to the target and try a grasp on it.
//!
//! `cargo run --release --example simulate -- [blocks] [seed]`

use clutter_grasp::grid::Pixel;
use clutter_grasp::scene::{simulate_grasp, simulate_push, spawn_random_clutter};

fn main() -> clutter_grasp::Result<()> {
    let mut args = std::env::args().skip(1);
    let blocks = args.next().and_then(|s| s.parse().ok()).unwrap_or(15);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    let scene = spawn_random_clutter(blocks, seed)?;
    let hm = scene.render_heightmap();
    let tmask = scene.target_mask()?;
    let c = tmask.centroid()?;
    println!(
        "{} blocks, target {} with {} visible px at {:?}, tallest cell {:.1} mm",
        scene.blocks.len(),
        scene.target_id,
        tmask.count(),
        c,
        hm.max() as f64 / 10.0
    );

    let pushed = simulate_push(&scene, Pixel::new(c.x - 40, c.y), 0.0);
    let moved = scene
        .blocks
        .iter()
        .filter(|b| pushed.block(b.id).map_or(true, |a| a.pose != b.pose))
        .count();
    println!("push from 40 px left of the target moved {moved} blocks");

    for k in 0..8u8 {
        let (_, outcome) = simulate_grasp(&scene, c, k);
        println!("grasp at target centroid, orientation {k}: {}", outcome.name());
    }
    Ok(())
}
