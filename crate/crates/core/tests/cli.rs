use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clutter_grasp::cli::{run, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};

fn args(list: &[&dyn AsRef<std::ffi::OsStr>]) -> Vec<OsString> {
    std::iter::once(OsString::from("clutter-grasp"))
        .chain(list.iter().map(|a| a.as_ref().to_os_string()))
        .collect()
}

#[test]
fn bench_writes_metrics_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let code = run(args(&[
        &"bench", &"--suite", &"random_easy", &"--runs", &"3", &"--scorer", &"heuristic", &"--out", &out,
    ]));
    assert_eq!(code, EXIT_OK);
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["overall"]["episodes"], 3);
    let csv = fs::read_to_string(out.join("episodes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(out.join("steps.jsonl").exists());
}

#[test]
fn collect_then_train_writes_model_and_loss_curve() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let model = dir.path().join("model");
    assert_eq!(run(args(&[&"collect", &"--samples", &"12", &"--seed", &"2", &"--out", &data])), EXIT_OK);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(data.join("collect.json")).unwrap()).unwrap();
    assert_eq!(summary["samples_per_kind"], 12);

    let gegd = data.join("push.gegd");
    assert_eq!(&fs::read(&gegd).unwrap()[..4], b"GEGD");
    assert_eq!(run(args(&[&"train", &"--data", &gegd, &"--epochs", &"3", &"--out", &model])), EXIT_OK);
    assert_eq!(&fs::read(model.join("model.geev")).unwrap()[..4], b"GEEV");
    let loss = fs::read_to_string(model.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 4, "{loss}");
}

#[test]
fn usage_and_operational_errors() {
    assert_eq!(run(args(&[&"bench", &"--no-such-flag"])), EXIT_USAGE);
    assert_eq!(run(args(&[&"fly"])), EXIT_USAGE);
    assert_eq!(run(args(&[&"episode"])), EXIT_USAGE);
    assert_eq!(run(args(&[&"bench", &"--runs", &"0"])), EXIT_USAGE);
    let missing = Path::new("/nonexistent/scene.json");
    assert_eq!(run(args(&[&"episode", &"--scenario", &missing])), EXIT_FAILURE);
}

#[test]
fn validate_and_episode_succeed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(args(&[&"validate", &"--scenes", &"3", &"--out", &dir.path()])), EXIT_OK);
    assert!(fs::read_to_string(dir.path().join("validate.txt")).unwrap().starts_with("PASS"));
    let scenario = clutter_grasp::bench::default_scenario_dir().join("01_ring_of_slabs.json");
    assert_eq!(
        run(args(&[&"episode", &"--scenario", &scenario, &"--seed", &"1", &"--out", &dir.path()])),
        EXIT_OK
    );
    assert!(!fs::read_to_string(dir.path().join("episode.jsonl")).unwrap().is_empty());
}
