//! Generate SCT push and grasp candidates and compare with the random ablation.
//!
//! `cargo run --release --example candidates -- [seed]`

use std::time::Instant;

use clutter_grasp::generators::{
    generate_grasps, generate_grasps_random, generate_pushes, generate_pushes_random, GeneratorConfig,
};
use clutter_grasp::scene::spawn_random_clutter;

fn main() -> clutter_grasp::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let scene = spawn_random_clutter(20, seed)?;
    let hm = scene.render_heightmap();
    let tmask = scene.target_mask()?;
    let cfg = GeneratorConfig::default();

    let t = Instant::now();
    let pushes = generate_pushes(&hm, &tmask, &cfg, seed).unwrap_or_default();
    let grasps = generate_grasps(&hm, &tmask, &cfg, seed).unwrap_or_default();
    println!("sct generation took {:.1} ms", t.elapsed().as_secs_f64() * 1e3);

    let mut quadrants = [0usize; 4];
    pushes.iter().for_each(|p| quadrants[p.quadrant as usize] += 1);
    println!("pushes: {} (per quadrant {quadrants:?})", pushes.len());
    let on = grasps.iter().filter(|g| g.on_target).count();
    println!("grasps: {} on target, {} off target", on, grasps.len() - on);
    if let Some(best) = grasps.iter().filter(|g| g.on_target).max_by_key(|g| g.sct_margin) {
        println!(
            "widest-margin target grasp at {:?} k={} ({:.1} mm clearance)",
            best.center,
            best.orientation_idx,
            best.sct_margin as f64 / 10.0
        );
    }

    let rp = generate_pushes_random(&hm, &tmask, &cfg, seed).unwrap_or_default();
    let rg = generate_grasps_random(&hm, &tmask, &cfg, seed).unwrap_or_default();
    println!("random ablation: {} pushes, {} grasps", rp.len(), rg.len());
    Ok(())
}
