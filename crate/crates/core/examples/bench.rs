//! Paired-seed benchmark: heuristic scorer against the random ablations.
//!
//! `cargo run --release --example bench -- [runs]`

use clutter_grasp::bench::{run_benchmark, BenchConfig, ScorerChoice, Suite};
use clutter_grasp::generators::GeneratorKind;

fn main() -> clutter_grasp::Result<()> {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let base = BenchConfig { suite: Suite::Random, runs_per_case: runs, seed: 1, ..Default::default() };
    let arms = [
        ("heuristic", base.clone()),
        ("random evaluator", BenchConfig { scorer: ScorerChoice::Random, ..base.clone() }),
        ("random generator", BenchConfig { generator: GeneratorKind::Random, ..base.clone() }),
        ("no pushing", BenchConfig { pushing_enabled: false, ..base.clone() }),
    ];
    for (name, cfg) in arms {
        let m = run_benchmark(&cfg)?.metrics;
        let me = m.overall.motion_efficiency.map_or("-".into(), |v| format!("{v:.2}"));
        println!("{name:17} SR {:.3}  ME {me}  over {} episodes", m.overall.success_rate, m.overall.episodes);
    }
    Ok(())
}
