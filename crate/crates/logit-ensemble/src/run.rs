//! Run configuration and the command implementations behind the CLI:
//! `prepare`, `train`, `evaluate`, and `gradcheck`, all writing their
//! artifacts into one output directory.
//!
//! Artifact layout per run:
//!
//! ```text
//! out/
//!   config.json           resolved run configuration
//!   augmented.csv         2K-row augmented dataset, input schema preserved
//!   split.json            train/test row indices into augmented.csv
//!   standardization.json  per-feature means and stds (fit on the union)
//!   balance.json          class counts of the augmented dataset
//!   model_n<k>.json       trained ensemble per layer count
//!   cost_n<k>.csv         iteration,cost history per layer count
//!   metrics_n<k>.json     train/test metrics per layer count
//!   roc_n<k>.csv          fpr,tpr,threshold points per layer count
//! ```

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::{batch_gradient, finite_difference_gradient, max_relative_error};
use crate::metrics::{classify, confusion_and_rates, roc_auc, RocCurve, RocPoint};
use crate::model::EnsembleModel;
use crate::pipeline::{
    augment_gaussian, class_balance_report, encode_labels, load_csv, split_indices,
    standardize, ClassBalance, Dataset, StandardizationParams,
};
use crate::probability::{class1_probability, label_probability, mixture_oracle};
use crate::trainer::{train, TrainConfig, TrainResult};

pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// One reproducible experiment. Every random stage carries its own seed, and
/// seeds are required fields so a config file pins the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: PathBuf,
    pub target_column: String,
    pub label_threshold: i64,
    pub augmentation_fraction: f64,
    pub augmentation_seed: u64,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub layers: Vec<u32>,
    pub train: TrainConfig,
    /// Score cut used for the accuracy/precision/recall columns.
    pub classification_threshold: f64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.display().to_string(),
            source: e,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("layers list is empty".into()));
        }
        if self.layers.iter().any(|&n| n == 0) {
            return Err(Error::Config("layer counts must be >= 1".into()));
        }
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub augmented_rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub balance: ClassBalance,
}

/// Metric names match the report schema consumed downstream; precision and
/// recall are null when undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub test_auc: f64,
    pub test_recall: Option<f64>,
    pub test_precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub n_layers: u32,
    pub feature_dim: usize,
    pub points: usize,
    pub max_gradient_relative_error: f64,
    pub max_probability_difference: f64,
    pub gradient_tolerance: f64,
    pub probability_tolerance: f64,
    pub gradient_ok: bool,
    pub probability_ok: bool,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })
}

/// Runs the data pipeline and writes the prepared artifacts.
pub fn prepare(config: &RunConfig) -> Result<PrepareSummary> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))?;

    let table = load_csv(&config.data, &config.target_column)?;
    let quality = table.target_as_integers()?;
    // Encode up front so a degenerate threshold fails before any file is
    // written; the augmented copies inherit their source row's label.
    encode_labels(&quality, config.label_threshold)?;

    let (aug_features, aug_quality) = augment_gaussian(
        &table.features,
        &quality,
        config.augmentation_fraction,
        config.augmentation_seed,
    )?;
    let aug_labels = encode_labels(&aug_quality, config.label_threshold)?;

    write_augmented_csv(
        &config.path("augmented.csv"),
        &table.feature_names,
        &table.target_name,
        table.delimiter,
        &aug_features,
        &aug_quality,
    )?;

    let (_, params) = standardize(&aug_features, &table.feature_names)?;
    write_json(&config.path("standardization.json"), &params)?;

    let (train_indices, test_indices) =
        split_indices(aug_features.len(), config.split_ratio, config.split_seed)?;
    let summary = PrepareSummary {
        augmented_rows: aug_features.len(),
        train_rows: train_indices.len(),
        test_rows: test_indices.len(),
        balance: class_balance_report(&aug_labels),
    };
    write_json(
        &config.path("split.json"),
        &SplitFile {
            train_indices,
            test_indices,
        },
    )?;
    write_json(&config.path("balance.json"), &summary.balance)?;
    write_json(&config.path("config.json"), config)?;
    Ok(summary)
}

fn write_augmented_csv(
    path: &Path,
    feature_names: &[String],
    target_name: &str,
    delimiter: u8,
    features: &[Vec<f64>],
    quality: &[i64],
) -> Result<()> {
    let sep = char::from(delimiter);
    let mut out = String::new();
    let mut header: Vec<String> = feature_names.to_vec();
    header.push(target_name.to_string());
    out.push_str(&header.join(&sep.to_string()));
    out.push('\n');
    for (row, q) in features.iter().zip(quality) {
        for v in row {
            out.push_str(&format!("{v}{sep}"));
        }
        out.push_str(&format!("{q}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Rebuilds the standardized train/test datasets from the prepare artifacts.
pub fn load_prepared(config: &RunConfig) -> Result<(Dataset, Dataset)> {
    let table = load_csv(config.path("augmented.csv"), &config.target_column)?;
    let quality = table.target_as_integers()?;
    let labels = encode_labels(&quality, config.label_threshold)?;
    let params: StandardizationParams = read_json(&config.path("standardization.json"))?;
    let standardized = params.apply(&table.features);
    let dataset = Dataset::new(standardized, labels, Some(table.feature_names))?;
    let split: SplitFile = read_json(&config.path("split.json"))?;
    Ok((
        Dataset::select(&dataset, &split.train_indices),
        Dataset::select(&dataset, &split.test_indices),
    ))
}

/// Trains one model per layer count and writes models and cost curves.
/// Layer `n` trains with seed `train.seed + n` so runs stay independent.
pub fn train_all(config: &RunConfig) -> Result<Vec<(u32, TrainResult)>> {
    config.validate()?;
    let (train_set, _) = load_prepared(config)?;
    let mut results = Vec::new();
    for &n in &config.layers {
        let layer_config = TrainConfig {
            seed: config.train.seed.wrapping_add(u64::from(n)),
            ..config.train.clone()
        };
        let result = train(&train_set, &layer_config, n)?;
        write_json(&config.path(&format!("model_n{n}.json")), &result.model)?;
        write_cost_csv(&config.path(&format!("cost_n{n}.csv")), &result.cost_history)?;
        results.push((n, result));
    }
    Ok(results)
}

fn write_cost_csv(path: &Path, history: &[(usize, f64)]) -> Result<()> {
    let mut out = String::from("iteration,cost\n");
    for &(iter, cost) in history {
        out.push_str(&format!("{iter},{cost}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_cost_csv(path: &Path) -> Result<Vec<(usize, f64)>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    text.lines()
        .skip(1)
        .map(|line| {
            let (i, c) = line.split_once(',').ok_or_else(|| Error::Config(format!(
                "malformed cost line {line:?} in {}",
                path.display()
            )))?;
            Ok((
                i.parse().map_err(|_| Error::Config(format!("bad iteration {i:?}")))?,
                c.parse().map_err(|_| Error::Config(format!("bad cost {c:?}")))?,
            ))
        })
        .collect()
}

pub fn load_model(path: &Path) -> Result<EnsembleModel> {
    read_json(path)
}

fn scores_for(model: &EnsembleModel, dataset: &Dataset) -> Result<Vec<f64>> {
    (0..dataset.len())
        .map(|k| class1_probability(model, dataset.row(k)))
        .collect()
}

/// Evaluates every trained layer model on the train and test splits, writing
/// `metrics_n<k>.json` and `roc_n<k>.csv`.
pub fn evaluate_all(config: &RunConfig) -> Result<Vec<(u32, EvalMetrics)>> {
    config.validate()?;
    let (train_set, test_set) = load_prepared(config)?;
    let mut all = Vec::new();
    for &n in &config.layers {
        let model = load_model(&config.path(&format!("model_n{n}.json")))?;
        if model.feature_dim() != train_set.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: train_set.feature_dim(),
                actual: model.feature_dim(),
            });
        }
        let train_scores = scores_for(&model, &train_set)?;
        let test_scores = scores_for(&model, &test_set)?;
        let cut = config.classification_threshold;
        let train_report =
            confusion_and_rates(&classify(&train_scores, cut), train_set.labels())?;
        let test_report = confusion_and_rates(&classify(&test_scores, cut), test_set.labels())?;
        let (curve, auc) = roc_auc(&test_scores, test_set.labels())?;
        let metrics = EvalMetrics {
            train_accuracy: train_report.accuracy,
            test_accuracy: test_report.accuracy,
            test_auc: auc,
            test_recall: test_report.recall,
            test_precision: test_report.precision,
        };
        write_json(&config.path(&format!("metrics_n{n}.json")), &metrics)?;
        write_roc_csv(&config.path(&format!("roc_n{n}.csv")), &curve)?;
        all.push((n, metrics));
    }
    Ok(all)
}

fn write_roc_csv(path: &Path, curve: &RocCurve) -> Result<()> {
    let mut out = String::from("fpr,tpr,threshold\n");
    for p in &curve.points {
        out.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, p.threshold));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_roc_csv(path: &Path) -> Result<RocCurve> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let points = text
        .lines()
        .skip(1)
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 3 {
                return Err(Error::Config(format!(
                    "malformed roc line {line:?} in {}",
                    path.display()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad roc value {s:?}")))
            };
            Ok(RocPoint {
                fpr: parse(cells[0])?,
                tpr: parse(cells[1])?,
                threshold: parse(cells[2])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RocCurve { points })
}

/// Compares analytical gradients against central finite differences and the
/// recursive probability against the path-enumeration oracle on a random
/// model and dataset. `corrupt_gradient` is a negative-control hook that
/// perturbs one analytical entry before the comparison.
pub fn gradcheck(
    n_layers: u32,
    feature_dim: usize,
    seed: u64,
    points: usize,
    corrupt_gradient: bool,
) -> Result<GradcheckReport> {
    if points == 0 {
        return Err(Error::Config("points must be >= 1".into()));
    }
    // Modest init scale keeps activations off the rails; a saturated router
    // drives path probabilities (and thus gradient entries) small enough
    // that finite differences drown in roundoff.
    let model = crate::trainer::init_model(n_layers, feature_dim, seed, 0.25)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(1));
    let unit = Normal::new(0.0, 1.0).unwrap();
    let features: Vec<Vec<f64>> = (0..points)
        .map(|_| (0..feature_dim).map(|_| unit.sample(&mut rng)).collect())
        .collect();
    let labels: Vec<u8> = (0..points).map(|_| rng.random_range(0..2u8)).collect();
    let labels = if labels.iter().all(|&y| y == labels[0]) {
        // Force both classes so the dataset exercises both leaf-term branches.
        let mut l = labels;
        let flip = l[0] ^ 1;
        l[0] = flip;
        l
    } else {
        labels
    };
    let dataset = Dataset::new(features, labels, None)?;

    let mut analytical = batch_gradient(&model, &dataset)?;
    if corrupt_gradient {
        analytical.as_mut_slice()[0] += 1e-2;
    }
    let numerical = finite_difference_gradient(&model, &dataset, 1e-6)?;
    let grad_err = max_relative_error(&analytical, &numerical, 1e-8);

    let mut prob_diff = 0.0f64;
    for k in 0..dataset.len() {
        for y in [0u8, 1u8] {
            let recursive = label_probability(&model, dataset.row(k), y)?;
            let oracle = mixture_oracle(&model, dataset.row(k), y)?;
            prob_diff = prob_diff.max((recursive - oracle).abs());
        }
    }

    Ok(GradcheckReport {
        n_layers,
        feature_dim,
        points,
        max_gradient_relative_error: grad_err,
        max_probability_difference: prob_diff,
        gradient_tolerance: GRADIENT_TOLERANCE,
        probability_tolerance: PROBABILITY_TOLERANCE,
        gradient_ok: grad_err <= GRADIENT_TOLERANCE,
        probability_ok: prob_diff <= PROBABILITY_TOLERANCE,
    })
}
