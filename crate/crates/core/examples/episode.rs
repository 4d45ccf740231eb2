//! Run one greedy push/grasp episode and print its step log.
//!
//! `cargo run --release --example episode -- [blocks] [seed]`

use clutter_grasp::evaluator::Evaluators;
use clutter_grasp::policy::{run_episode, PolicyConfig};
use clutter_grasp::scene::spawn_random_clutter;

fn main() -> clutter_grasp::Result<()> {
    let mut args = std::env::args().skip(1);
    let blocks = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let scene = spawn_random_clutter(blocks, seed)?;
    let result = run_episode(&scene, &Evaluators::heuristic(), &PolicyConfig::default(), seed)?;
    for s in &result.log {
        println!(
            "{}: {:?} via {} at ({}, {}) score {:?} -> {:?}, label {}",
            s.step,
            s.kind,
            s.source.name(),
            s.x,
            s.y,
            s.score,
            s.outcome,
            s.label
        );
    }
    println!("{} in {} motions", result.outcome.name(), result.motions);
    Ok(())
}
