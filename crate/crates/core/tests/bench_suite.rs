use std::fs;

use clutter_grasp::bench::{
    compute_metrics, default_scenario_dir, has_initial_target_grasp, load_challenging_suite, records_from_csv,
    run_benchmark, BenchConfig, EpisodeRecord, ScorerChoice, Suite,
};
use clutter_grasp::policy::EpisodeOutcome;
use clutter_grasp::scene::{load_scenario, save_scenario};
use clutter_grasp::Error;

#[test]
fn metrics_recomputed_from_csv_match() {
    let cfg = BenchConfig { suite: Suite::Random, runs_per_case: 3, seed: 21, ..Default::default() };
    let result = run_benchmark(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    result.write(dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("episodes.csv")).unwrap();
    let records = records_from_csv(&text, "episodes.csv").unwrap();
    assert_eq!(records, result.records);
    assert_eq!(compute_metrics(&cfg, &records), result.metrics);
    assert!(result.metrics.cases.iter().all(|c| c.episodes == 3));
}

#[test]
fn ablation_arms_see_the_same_scenes() {
    let base = BenchConfig { suite: Suite::RandomNormal, runs_per_case: 4, seed: 5, ..Default::default() };
    let a = run_benchmark(&base).unwrap();
    let b = run_benchmark(&BenchConfig { scorer: ScorerChoice::Random, ..base.clone() }).unwrap();
    let hashes = |r: &[EpisodeRecord]| r.iter().map(|x| x.scene_hash.clone()).collect::<Vec<_>>();
    assert_eq!(hashes(&a.records), hashes(&b.records));
}

#[test]
fn same_seed_same_files() {
    let cfg = BenchConfig { runs_per_case: 1, seed: 3, threads: 0, ..Default::default() };
    let a = run_benchmark(&cfg).unwrap();
    let b = run_benchmark(&cfg).unwrap();
    assert_eq!(a.metrics_json(), b.metrics_json());
    assert_eq!(a.steps_jsonl(), b.steps_jsonl());
}

#[test]
fn motion_efficiency_is_k_when_every_episode_takes_k() {
    let records: Vec<EpisodeRecord> = (0..6)
        .map(|run| EpisodeRecord {
            case: "c".into(),
            run,
            seed: run as u64,
            scene_hash: String::new(),
            outcome: EpisodeOutcome::Success,
            motions: 3,
            pushes: 2,
            grasps: 1,
        })
        .collect();
    let m = compute_metrics(&BenchConfig::default(), &records);
    assert_eq!(m.overall.motion_efficiency, Some(3.0));
    assert_eq!(m.overall.motion_efficiency_std, Some(0.0));
    assert_eq!(m.overall.success_rate, 1.0);
}

#[test]
fn shipped_challenging_cases_block_direct_grasps() {
    let suite = load_challenging_suite(default_scenario_dir()).unwrap();
    assert_eq!(suite.len(), 8);
    for (name, scene) in &suite {
        assert!(!has_initial_target_grasp(scene).unwrap(), "{name}");
        assert!(!scene.target_mask().unwrap().is_empty(), "{name}");
    }
}

#[test]
fn challenging_round_trip_and_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let (_, scene) = &load_challenging_suite(default_scenario_dir()).unwrap()[0];
    let path = dir.path().join("copy.json");
    save_scenario(scene, &path, Some("copy")).unwrap();
    assert_eq!(load_scenario(&path).unwrap().hash_hex(), scene.hash_hex());

    fs::write(dir.path().join("empty.json"), "").unwrap();
    assert!(matches!(load_challenging_suite(dir.path()), Err(Error::Parse { .. })));
}

#[test]
fn direct_grasp_scene_rejected_from_suite() {
    let dir = tempfile::tempdir().unwrap();
    let scene = clutter_grasp::scene::spawn_random_clutter(10, 2).unwrap();
    assert!(has_initial_target_grasp(&scene).unwrap());
    save_scenario(&scene, dir.path().join("easy.json"), None).unwrap();
    assert!(matches!(load_challenging_suite(dir.path()), Err(Error::Format(_))));
}
