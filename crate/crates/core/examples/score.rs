//! Encode candidate features and rank them with the heuristic scorer.
//!
//! `cargo run --release --example score -- [seed]`

use clutter_grasp::evaluator::{score_candidates, FeatureContext, HeuristicScorer};
use clutter_grasp::evaluator::features::{SCALAR_DISTANCE, SCALAR_MARGIN, SCALAR_ON_TARGET};
use clutter_grasp::evaluator::dataset::step_candidates;
use clutter_grasp::generators::{GeneratorConfig, GeneratorKind};
use clutter_grasp::scene::spawn_random_clutter;

fn main() -> clutter_grasp::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(11);
    let scene = spawn_random_clutter(15, seed)?;
    let hm = scene.render_heightmap();
    let tmask = scene.target_mask()?;
    let (pushes, grasps) = step_candidates(GeneratorKind::Sct, &hm, &tmask, &GeneratorConfig::default(), seed)?;
    let candidates: Vec<_> = pushes.into_iter().chain(grasps).collect();

    let ctx = FeatureContext::new(&hm, &tmask)?;
    let first = ctx.encode(&hm, &tmask, candidates[0].mask());
    println!(
        "{} candidates; first one: on_target {} distance {:.2} margin {:.2}",
        candidates.len(),
        first.values()[SCALAR_ON_TARGET],
        first.values()[SCALAR_DISTANCE],
        first.values()[SCALAR_MARGIN]
    );

    let mut ranked = score_candidates(&HeuristicScorer, &hm, &tmask, &candidates)?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (c, s) in ranked.iter().take(5) {
        println!("{:5?} at {:?} param {:.2}: {s:.3}", c.kind(), c.pixel(), c.parameter());
    }
    Ok(())
}
