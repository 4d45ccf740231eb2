//! Invariant sweeps: SCT against the polygon oracle, mask rasters, caps.
//!
//! `cargo run --release --example validate -- [scenes]`

use clutter_grasp::validate::run_all;

fn main() -> clutter_grasp::Result<()> {
    let scenes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    for check in run_all(scenes, 0)? {
        println!("{check}");
    }
    Ok(())
}
