//! Action evaluators: feature encoding, scorers, labels, data collection
//! and training.

pub mod features;
pub mod dataset;
pub mod labels;
pub mod scorer;
pub mod train;

pub use features::{extract_features, BorderStats, FeatureContext, FeatureVector, FEATURE_LEN};
pub use labels::{label_grasp, label_push, observe, Observation};
pub use scorer::{score_candidates, Evaluators, HeuristicScorer, RandomScorer, Scorer, TrainableScorer};
pub use dataset::{collect_dataset, execute, load_examples, CollectConfig, Dataset, Example, LabeledSample};
pub use train::{gradient_check, train, GradCheck, TrainConfig, TrainReport};
