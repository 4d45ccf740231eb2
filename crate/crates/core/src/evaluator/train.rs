//! Mini-batch L1 regression of scorer parameters.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Example;
use super::scorer::TrainableScorer;
use crate::error::{Error, Result};
use crate::seed::derive;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Heavy-ball momentum.
    Sgd,
    /// Bias-corrected first and second moment estimates.
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Decoupled: each step scales parameters by `1 − lr · weight_decay`.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub hidden: usize,
    pub optimizer: Optimizer,
    pub momentum: f64,
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            weight_decay: 2e-5,
            batch_size: 32,
            epochs: 20,
            seed: 0,
            hidden: 64,
            optimizer: Optimizer::Sgd,
            momentum: 0.9,
            holdout_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return bad("holdout_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_l1: f64,
    /// NaN when the held-out split is empty.
    pub heldout_l1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: TrainableScorer,
    pub initial: TrainableScorer,
    pub history: Vec<EpochLoss>,
    pub train_idx: Vec<usize>,
    pub heldout_idx: Vec<usize>,
}

impl TrainReport {
    pub fn write_loss_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "epoch,train_l1,heldout_l1")?;
        for e in &self.history {
            writeln!(w, "{},{},{}", e.epoch, e.train_l1, e.heldout_l1)?;
        }
        Ok(())
    }
}

/// Mean absolute error over the selected examples.
pub fn mean_l1(model: &TrainableScorer, data: &[Example], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return f64::NAN;
    }
    idx.iter()
        .map(|&i| (model.predict(data[i].features.values()) - data[i].value as f64).abs())
        .sum::<f64>()
        / idx.len() as f64
}

/// Mean prediction per label value; `None` for absent values.
pub fn class_means(model: &TrainableScorer, data: &[Example], idx: &[usize]) -> [Option<f64>; 3] {
    let mut sum = [0.0; 3];
    let mut n = [0usize; 3];
    for &i in idx {
        let v = data[i].value as usize;
        sum[v] += model.predict(data[i].features.values());
        n[v] += 1;
    }
    std::array::from_fn(|v| (n[v] > 0).then(|| sum[v] / n[v] as f64))
}

/// Seeded shuffle, last `holdout_fraction` of it held out.
pub fn split(n: usize, holdout_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive(seed, 0x5e1)));
    let held = ((n as f64) * holdout_fraction).round() as usize;
    let held = held.min(n.saturating_sub(1));
    let heldout = idx.split_off(n - held);
    (idx, heldout)
}

pub fn train(data: &[Example], cfg: &TrainConfig) -> Result<TrainReport> {
    train_from(TrainableScorer::new(cfg.hidden, derive(cfg.seed, 0x1417)), data, cfg)
}

/// Train starting from the given parameters.
pub fn train_from(initial: TrainableScorer, data: &[Example], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("dataset is empty".into()));
    }
    let (train_idx, heldout_idx) = split(data.len(), cfg.holdout_fraction, cfg.seed);
    let mut model = initial.clone();
    let np = model.params.len();
    let mut grad = vec![0.0; np];
    let mut m1 = vec![0.0; np];
    let mut m2 = vec![0.0; np];
    let mut t = 0i32;
    let mut order = train_idx.clone();
    let mut history = Vec::with_capacity(cfg.epochs);
    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive(cfg.seed, epoch as u64)));
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let x = data[i].features.values();
                let trace = model.forward(x);
                let r = trace.output - data[i].value as f64;
                if r != 0.0 {
                    model.backward(x, &trace, r.signum() * scale, &mut grad);
                }
            }
            t += 1;
            let lr = cfg.learning_rate;
            let decay = 1.0 - lr * cfg.weight_decay;
            match cfg.optimizer {
                Optimizer::Sgd => {
                    for ((p, g), v) in model.params.iter_mut().zip(&grad).zip(&mut m1) {
                        *v = cfg.momentum * *v + g;
                        *p = *p * decay - lr * *v;
                    }
                }
                Optimizer::Adam => {
                    let c1 = 1.0 - b1.powi(t);
                    let c2 = 1.0 - b2.powi(t);
                    for (((p, g), m), s) in model.params.iter_mut().zip(&grad).zip(&mut m1).zip(&mut m2) {
                        *m = b1 * *m + (1.0 - b1) * g;
                        *s = b2 * *s + (1.0 - b2) * g * g;
                        *p = *p * decay - lr * (*m / c1) / ((*s / c2).sqrt() + eps);
                    }
                }
            }
        }
        history.push(EpochLoss {
            epoch,
            train_l1: mean_l1(&model, data, &train_idx),
            heldout_l1: mean_l1(&model, data, &heldout_idx),
        });
    }
    Ok(TrainReport {
        model,
        initial,
        history,
        train_idx,
        heldout_idx,
    })
}

pub const GRAD_CHECK_STEP: f64 = 1e-4;
pub const GRAD_CHECK_KINK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradCheck {
    Checked { max_abs_error: f64, params: usize },
    /// Residual within the kink band.
    Skipped { residual: f64 },
}

/// Compare the analytic gradient of `|f(x) − y|` with central differences.
///
/// Checks every output-layer parameter, every hidden bias and the weights of
/// up to `max_inputs` nonzero inputs; perturbations that would flip a
/// rectifier are excluded.
pub fn gradient_check(model: &TrainableScorer, sample: &Example, max_inputs: usize) -> GradCheck {
    let x = sample.features.values();
    let y = sample.value as f64;
    let trace = model.forward(x);
    let residual = trace.output - y;
    if residual.abs() <= GRAD_CHECK_KINK {
        return GradCheck::Skipped { residual };
    }
    let mut grad = vec![0.0; model.params.len()];
    model.backward(x, &trace, residual.signum(), &mut grad);

    let n1 = model.dims()[1];
    let (w, b) = model.layer_offsets(0);
    let mut probe: Vec<usize> = (b..model.params.len()).collect();
    let inputs: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    let stride = (inputs.len() / max_inputs.max(1)).max(1);
    for &i in inputs.iter().step_by(stride).take(max_inputs) {
        probe.extend(w + i * n1..w + (i + 1) * n1);
    }

    let h = GRAD_CHECK_STEP;
    let mut m = model.clone();
    let mut max_err = 0.0f64;
    let mut checked = 0;
    for k in probe {
        let p0 = m.params[k];
        m.params[k] = p0 + h;
        let plus = m.forward(x);
        m.params[k] = p0 - h;
        let minus = m.forward(x);
        m.params[k] = p0;
        let flips = plus
            .hidden_pre
            .iter()
            .zip(&minus.hidden_pre)
            .zip(&trace.hidden_pre)
            .any(|((a, b), c)| (*a > 0.0) != (*c > 0.0) || (*b > 0.0) != (*c > 0.0));
        if flips {
            continue;
        }
        let numeric = ((plus.output - y).abs() - (minus.output - y).abs()) / (2.0 * h);
        max_err = max_err.max((numeric - grad[k]).abs());
        checked += 1;
    }
    GradCheck::Checked {
        max_abs_error: max_err,
        params: checked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::features::{FeatureVector, FEATURE_LEN};
    use rand::Rng;

    fn synthetic(n: usize, seed: u64) -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let v: u8 = rng.gen_range(0..3);
                let mut x: Vec<f64> = (0..FEATURE_LEN)
                    .map(|_| if rng.gen_bool(0.2) { rng.gen_range(0.0..1.0) } else { 0.0 })
                    .collect();
                x[FEATURE_LEN - 3] = v as f64 * 0.5 + rng.gen_range(-0.1..0.1);
                Example {
                    features: FeatureVector(x),
                    value: v,
                }
            })
            .collect()
    }

    #[test]
    fn zero_epochs_keep_init() {
        let data = synthetic(20, 1);
        let cfg = TrainConfig { epochs: 0, hidden: 8, ..Default::default() };
        let r = train(&data, &cfg).unwrap();
        assert_eq!(r.model, r.initial);
        assert!(r.history.is_empty());
    }

    #[test]
    fn zero_rate_keeps_params() {
        let data = synthetic(40, 2);
        for optimizer in [Optimizer::Sgd, Optimizer::Adam] {
            let cfg = TrainConfig {
                epochs: 3,
                hidden: 8,
                learning_rate: 0.0,
                weight_decay: 0.0,
                optimizer,
                ..Default::default()
            };
            let r = train(&data, &cfg).unwrap();
            assert_eq!(r.model.params, r.initial.params);
        }
    }

    #[test]
    fn split_is_ninety_ten() {
        let (a, b) = split(100, 0.1, 3);
        assert_eq!((a.len(), b.len()), (90, 10));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(split(100, 0.1, 3), (a, b));
        assert_eq!(split(1, 0.1, 0).1.len(), 0);
    }

    #[test]
    fn learns_synthetic_labels() {
        let data = synthetic(600, 4);
        let cfg = TrainConfig {
            epochs: 10,
            hidden: 16,
            learning_rate: 1e-3,
            ..Default::default()
        };
        let r = train(&data, &cfg).unwrap();
        assert!(r.history[9].train_l1 < r.history[0].train_l1);
        let m = class_means(&r.model, &data, &r.heldout_idx);
        assert!(m[2].unwrap() > m[1].unwrap() && m[1].unwrap() > m[0].unwrap(), "{m:?}");
    }

    #[test]
    fn all_zero_labels_fit_zero() {
        let mut data = synthetic(200, 5);
        data.iter_mut().for_each(|e| e.value = 0);
        let cfg = TrainConfig {
            epochs: 30,
            hidden: 8,
            learning_rate: 1e-3,
            ..Default::default()
        };
        let r = train(&data, &cfg).unwrap();
        let all: Vec<usize> = (0..data.len()).collect();
        assert!(mean_l1(&r.model, &data, &all) < 0.1);
    }

    #[test]
    fn gradients_match_differences() {
        let data = synthetic(30, 6);
        let mlp = TrainableScorer::new(64, 7);
        let lin = TrainableScorer::new(0, 7);
        let mut checked = 0;
        for e in &data {
            if let GradCheck::Checked { max_abs_error, params } = gradient_check(&mlp, e, 16) {
                assert!(max_abs_error < 1e-5, "{max_abs_error}");
                assert!(params > 64);
                checked += 1;
            }
            if let GradCheck::Checked { max_abs_error, .. } = gradient_check(&lin, e, 1000) {
                assert!(max_abs_error < 1e-7, "{max_abs_error}");
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn kink_samples_are_skipped() {
        let mut m = TrainableScorer::new(0, 1);
        let e = Example {
            features: FeatureVector(vec![0.0; FEATURE_LEN]),
            value: 1,
        };
        let last = m.params.len() - 1;
        m.params[last] = 1.0005;
        assert!(matches!(gradient_check(&m, &e, 8), GradCheck::Skipped { .. }));
    }
}
