//! Load the shipped adversarial scenes and run them with and without pushing.
//!
//! `cargo run --release --example challenging`

use clutter_grasp::bench::{default_scenario_dir, load_challenging_suite};
use clutter_grasp::evaluator::Evaluators;
use clutter_grasp::policy::{run_episode, PolicyConfig};

fn main() -> clutter_grasp::Result<()> {
    let suite = load_challenging_suite(default_scenario_dir())?;
    let evaluators = Evaluators::heuristic();
    let grasp_only = PolicyConfig { pushing_enabled: false, ..Default::default() };
    for (name, scene) in &suite {
        let full = run_episode(scene, &evaluators, &PolicyConfig::default(), 0)?;
        let only = run_episode(scene, &evaluators, &grasp_only, 0)?;
        println!(
            "{name:18} {} blocks: full {} ({}), grasp-only {} ({})",
            scene.blocks.len(),
            full.outcome.name(),
            full.motions,
            only.outcome.name(),
            only.motions
        );
    }
    Ok(())
}
