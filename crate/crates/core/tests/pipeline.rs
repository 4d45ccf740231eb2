use clutter_grasp::evaluator::dataset::{collect_dataset, Dataset};
use clutter_grasp::evaluator::train::{train, TrainConfig};
use clutter_grasp::evaluator::{Evaluators, TrainableScorer};
use clutter_grasp::policy::{run_episode, PolicyConfig};
use clutter_grasp::scene::spawn_random_clutter;

#[test]
fn collect_store_train_and_act() {
    let (push, grasp) = collect_dataset(16, 9).unwrap();
    assert_eq!((push.len(), grasp.len()), (16, 16));
    assert_eq!(grasp.histogram().iter().sum::<usize>(), 16);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grasp.gegd");
    grasp.save(&path).unwrap();
    assert_eq!(Dataset::load(&path).unwrap(), grasp);

    let cfg = TrainConfig { epochs: 2, hidden: 8, ..Default::default() };
    let models: Vec<TrainableScorer> = [&push, &grasp]
        .iter()
        .map(|d| train(&d.examples().unwrap(), &cfg).unwrap().model)
        .collect();
    for (m, name) in models.iter().zip(["push", "grasp"]) {
        m.save(dir.path().join(format!("{name}.geev"))).unwrap();
    }
    let push_model = TrainableScorer::load(dir.path().join("push.geev")).unwrap();
    let grasp_model = TrainableScorer::load(dir.path().join("grasp.geev")).unwrap();
    assert_eq!(push_model.params.len(), models[0].params.len());

    let evaluators = Evaluators::new(push_model, grasp_model);
    let scene = spawn_random_clutter(12, 4).unwrap();
    let result = run_episode(&scene, &evaluators, &PolicyConfig::default(), 4).unwrap();
    assert!(result.motions >= 1 && result.motions <= 5);
    assert_eq!(result.log.len(), result.motions);
}
