//! Execute random candidates and print the value label of each transition.
//!
//! `cargo run --release --example labels`

use clutter_grasp::evaluator::dataset::{execute, step_candidates};
use clutter_grasp::evaluator::{label_grasp, label_push, observe};
use clutter_grasp::generators::{GeneratorConfig, GeneratorKind};
use clutter_grasp::scene::spawn_random_clutter;

fn main() -> clutter_grasp::Result<()> {
    let cfg = GeneratorConfig::default();
    for seed in 0..6u64 {
        let scene = spawn_random_clutter(15, seed)?;
        let hm = scene.render_heightmap();
        let tmask = scene.target_mask()?;
        let (pushes, grasps) = step_candidates(GeneratorKind::Sct, &hm, &tmask, &cfg, seed)?;
        let candidates: Vec<_> = pushes.into_iter().chain(grasps).collect();
        let c = &candidates[(seed as usize * 37) % candidates.len()];
        let t = execute(&scene, c);
        let before = observe(&scene)?;
        let value = match t.outcome {
            Some(o) => label_grasp(o, &scene, &t.after, scene.target_id),
            None if !t.after.has_target() => {
                println!("seed {seed}: push evicted the target");
                continue;
            }
            None => label_push(&scene, &t.after, scene.target_id)?,
        };
        let after = if t.after.has_target() { Some(observe(&t.after)?) } else { None };
        println!(
            "seed {seed}: {:?} {} -> value {value} (visible {} -> {:?}, ring {} -> {:?})",
            c.kind(),
            t.outcome.map_or("", |o| o.name()),
            before.visible,
            after.map(|a| a.visible),
            before.occupancy,
            after.map(|a| a.occupancy)
        );
    }
    Ok(())
}
