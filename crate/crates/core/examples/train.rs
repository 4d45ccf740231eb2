//! Collect a small dataset, fit a scorer with L1 loss and check its gradient.
//!
//! `cargo run --release --example train -- [samples]`

use clutter_grasp::evaluator::dataset::{collect_examples, CollectConfig};
use clutter_grasp::evaluator::train::{class_means, gradient_check, train, GradCheck, TrainConfig};
use clutter_grasp::evaluator::TrainableScorer;

fn main() -> clutter_grasp::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(400);
    let (_, grasps) = collect_examples(n, 5, &CollectConfig::default())?;
    let mut hist = [0; 3];
    grasps.iter().for_each(|e| hist[e.value as usize] += 1);
    println!("{n} grasp samples, values {hist:?}");

    let cfg = TrainConfig { epochs: 10, ..Default::default() };
    let report = train(&grasps, &cfg)?;
    for e in &report.history {
        println!("epoch {:2}: train {:.4} heldout {:.4}", e.epoch, e.train_l1, e.heldout_l1);
    }
    println!("held-out mean score by value {:?}", class_means(&report.model, &grasps, &report.heldout_idx));

    match gradient_check(&report.model, &grasps[0], 16) {
        GradCheck::Checked { max_abs_error, params } => {
            println!("gradient check over {params} parameters: max error {max_abs_error:.2e}")
        }
        GradCheck::Skipped { residual } => println!("sample sits on the L1 kink (residual {residual:.1e})"),
    }

    let path = std::env::temp_dir().join("clutter-grasp-example.geev");
    report.model.save(&path)?;
    let back = TrainableScorer::load(&path)?;
    println!("saved and reloaded {} ({} parameters)", path.display(), back.params.len());
    Ok(())
}
