//! Full-batch gradient descent with seeded initialization and cost-history
//! tracking.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::{batch_gradient, cost};
use crate::model::{node_count, EnsembleModel};
use crate::pipeline::Dataset;

/// Early stop fires when `|delta cost|` stays below this for
/// `EARLY_STOP_PATIENCE` consecutive iterations.
pub const EARLY_STOP_TOLERANCE: f64 = 1e-9;
pub const EARLY_STOP_PATIENCE: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    /// Std of the zero-mean Gaussian weight init. Zero means all-zero
    /// weights, which leaves sibling subtrees permanently identical.
    pub init_scale: f64,
    pub seed: u64,
    pub cost_record_stride: usize,
    /// Stop once the cost change stays below `EARLY_STOP_TOLERANCE` for
    /// `EARLY_STOP_PATIENCE` consecutive iterations.
    pub early_stop: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            iterations: 5000,
            init_scale: 0.01,
            seed: 0,
            cost_record_stride: 1,
            early_stop: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if self.init_scale < 0.0 || !self.init_scale.is_finite() {
            return Err(Error::Config(format!(
                "init_scale must be nonnegative, got {}",
                self.init_scale
            )));
        }
        if self.cost_record_stride == 0 {
            return Err(Error::Config("cost_record_stride must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub model: EnsembleModel,
    /// `(iteration, cost)` pairs; iteration 0 is the pre-update cost.
    pub cost_history: Vec<(usize, f64)>,
    pub converged_iterations: usize,
}

/// Weights drawn i.i.d. from `Normal(0, init_scale)` using ChaCha12 seeded
/// from `seed`; the same seed always produces the same model.
pub fn init_model(
    n_layers: u32,
    feature_dim: usize,
    seed: u64,
    init_scale: f64,
) -> Result<EnsembleModel> {
    if n_layers == 0 || feature_dim == 0 {
        return Err(Error::InvalidShape(
            "n_layers and feature_dim must be >= 1".into(),
        ));
    }
    let len = node_count(n_layers) * (feature_dim + 1);
    let weights = if init_scale == 0.0 {
        vec![0.0; len]
    } else {
        let normal = Normal::new(0.0, init_scale)
            .map_err(|e| Error::Config(format!("init distribution: {e}")))?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..len).map(|_| normal.sample(&mut rng)).collect()
    };
    EnsembleModel::from_weights(n_layers, feature_dim, weights)
}

/// Plain full-batch descent: `w <- w - learning_rate * batch_gradient`,
/// repeated up to `iterations` times. Gradients are summed, not averaged,
/// over the batch, so the learning rate absorbs dataset scale.
pub fn train(dataset: &Dataset, config: &TrainConfig, n_layers: u32) -> Result<TrainResult> {
    config.validate()?;
    if dataset.len() == 0 {
        return Err(Error::EmptyDataset);
    }
    let model = init_model(n_layers, dataset.feature_dim(), config.seed, config.init_scale)?;
    train_from(dataset, config, model)
}

/// Descent from an explicit starting model; `train` wraps this with the
/// seeded initializer.
pub fn train_from(
    dataset: &Dataset,
    config: &TrainConfig,
    mut model: EnsembleModel,
) -> Result<TrainResult> {
    config.validate()?;
    let mut history = Vec::new();
    let mut current_cost = cost(&model, dataset)?;
    history.push((0, current_cost));
    let mut quiet_steps = 0usize;
    let mut completed = 0usize;

    for iter in 1..=config.iterations {
        let grad = batch_gradient(&model, dataset)
            .map_err(|e| divergence(e, iter))?;
        for (w, g) in model.weights_flat_mut().iter_mut().zip(grad.as_slice()) {
            *w -= config.learning_rate * g;
        }
        let next_cost = cost(&model, dataset).map_err(|e| divergence(e, iter))?;
        if !next_cost.is_finite() {
            return Err(Error::Diverged { iteration: iter });
        }
        if iter % config.cost_record_stride == 0 {
            history.push((iter, next_cost));
        }
        completed = iter;
        if (current_cost - next_cost).abs() < EARLY_STOP_TOLERANCE {
            quiet_steps += 1;
            if config.early_stop && quiet_steps >= EARLY_STOP_PATIENCE {
                if history.last().map(|&(i, _)| i) != Some(iter) {
                    history.push((iter, next_cost));
                }
                break;
            }
        } else {
            quiet_steps = 0;
        }
        current_cost = next_cost;
    }

    Ok(TrainResult {
        model,
        cost_history: history,
        converged_iterations: completed,
    })
}

/// Non-finite activations mid-descent mean the step size blew up; report the
/// iteration instead of the raw numeric error.
fn divergence(e: Error, iteration: usize) -> Error {
    match e {
        Error::NonFinite(_) => Error::Diverged { iteration },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::classify;
    use crate::probability::class1_probability;

    fn separable_dataset() -> Dataset {
        Dataset::new(
            vec![vec![-2.0], vec![-1.5], vec![1.5], vec![2.0]],
            vec![0, 0, 1, 1],
            None,
        )
        .unwrap()
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_model(3, 10, 42, 0.01).unwrap();
        let b = init_model(3, 10, 42, 0.01).unwrap();
        assert_eq!(a, b);
        let c = init_model(3, 10, 43, 0.01).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_shape_and_zero_scale() {
        let m = init_model(3, 10, 1, 0.0).unwrap();
        assert_eq!(m.node_count(), 7);
        assert_eq!(m.weights_flat().len(), 7 * 11);
        assert!(m.weights_flat().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn zero_learning_rate_limit() {
        // lr -> 0 limit: a single tiny-lr iteration barely moves the weights.
        let ds = separable_dataset();
        let config = TrainConfig {
            learning_rate: 1e-300,
            iterations: 1,
            init_scale: 0.01,
            seed: 9,
            ..TrainConfig::default()
        };
        let start = init_model(1, 1, 9, 0.01).unwrap();
        let result = train(&ds, &config, 1).unwrap();
        for (a, b) in start.weights_flat().iter().zip(result.model.weights_flat()) {
            assert!((a - b).abs() < 1e-290);
        }
    }

    #[test]
    fn separable_problem_reaches_full_accuracy() {
        let ds = separable_dataset();
        let config = TrainConfig {
            learning_rate: 0.5,
            iterations: 2000,
            seed: 3,
            ..TrainConfig::default()
        };
        let result = train(&ds, &config, 1).unwrap();
        let scores: Vec<f64> = (0..ds.len())
            .map(|k| class1_probability(&result.model, ds.row(k)).unwrap())
            .collect();
        let preds = classify(&scores, 0.5);
        assert_eq!(preds, ds.labels());
    }

    /// Two clusters at x1 = ±3 whose labels flip with the sign of x2 in
    /// opposite directions: jointly not linearly separable, but each cluster
    /// is separable on its own.
    fn xor_like_dataset() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for &center in &[-3.0f64, 3.0] {
            for i in 0..10 {
                let x2 = -2.25 + 0.5 * f64::from(i);
                rows.push(vec![center, x2]);
                let positive = if center < 0.0 { x2 > 0.0 } else { x2 < 0.0 };
                labels.push(u8::from(positive));
            }
        }
        Dataset::new(rows, labels, None).unwrap()
    }

    fn train_accuracy(ds: &Dataset, model: &EnsembleModel) -> f64 {
        let scores: Vec<f64> = (0..ds.len())
            .map(|k| class1_probability(model, ds.row(k)).unwrap())
            .collect();
        let preds = classify(&scores, 0.5);
        let hits = preds.iter().zip(ds.labels()).filter(|(p, y)| p == y).count();
        hits as f64 / ds.len() as f64
    }

    #[test]
    fn two_layers_solve_what_one_layer_cannot() {
        let ds = xor_like_dataset();
        let config = TrainConfig {
            learning_rate: 0.05,
            iterations: 5000,
            seed: 21,
            ..TrainConfig::default()
        };
        let shallow = train(&ds, &config, 1).unwrap();
        let deep = train(&ds, &config, 2).unwrap();
        // A single linear cut tops out at 3/4 of this set; the routed pair
        // of leaves can carve both clusters.
        assert!(train_accuracy(&ds, &shallow.model) <= 0.75);
        assert!(train_accuracy(&ds, &deep.model) > 0.95);
    }

    #[test]
    fn training_is_deterministic() {
        let ds = separable_dataset();
        let config = TrainConfig {
            learning_rate: 0.1,
            iterations: 200,
            seed: 17,
            ..TrainConfig::default()
        };
        let a = train(&ds, &config, 2).unwrap();
        let b = train(&ds, &config, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cost_history_is_non_increasing_at_small_lr() {
        let ds = separable_dataset();
        let config = TrainConfig {
            learning_rate: 0.01,
            iterations: 500,
            seed: 5,
            ..TrainConfig::default()
        };
        let result = train(&ds, &config, 2).unwrap();
        for pair in result.cost_history.windows(2) {
            assert!(pair[1].1 <= pair[0].1 + 1e-9);
        }
    }

    #[test]
    fn zero_init_keeps_siblings_identical() {
        let ds = separable_dataset();
        let config = TrainConfig {
            learning_rate: 0.1,
            iterations: 100,
            init_scale: 0.0,
            seed: 0,
            early_stop: false,
            ..TrainConfig::default()
        };
        let result = train(&ds, &config, 2).unwrap();
        let w2 = result.model.node_weights(2).unwrap().to_vec();
        let w3 = result.model.node_weights(3).unwrap().to_vec();
        assert_eq!(w2, w3);
    }

    #[test]
    fn cost_record_stride_thins_history() {
        let ds = separable_dataset();
        let config = TrainConfig {
            learning_rate: 0.01,
            iterations: 100,
            seed: 5,
            cost_record_stride: 10,
            early_stop: false,
            ..TrainConfig::default()
        };
        let result = train(&ds, &config, 1).unwrap();
        let iters: Vec<usize> = result.cost_history.iter().map(|&(i, _)| i).collect();
        assert_eq!(iters, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
    }

    #[test]
    fn config_validation() {
        let ds = separable_dataset();
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(train(&ds, &bad, 1).is_err());
        let bad = TrainConfig {
            iterations: 0,
            ..TrainConfig::default()
        };
        assert!(train(&ds, &bad, 1).is_err());
    }

    #[test]
    fn divergence_is_reported_with_iteration() {
        // Huge feature scale plus an absurd learning rate overflows the
        // linear term within the first steps.
        let ds = Dataset::new(
            vec![vec![-1e155], vec![1e155]],
            vec![0, 1],
            None,
        )
        .unwrap();
        let config = TrainConfig {
            learning_rate: 1e155,
            iterations: 50,
            seed: 1,
            ..TrainConfig::default()
        };
        match train(&ds, &config, 1) {
            Err(Error::Diverged { iteration }) => assert!(iteration >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
