//! Dataset ingestion and preparation: CSV loading, binary label encoding,
//! standardization, Gaussian augmentation, and the train/test split.
//!
//! Pipeline order: encode -> augment (on raw features) -> standardize
//! (fit on the union) -> split. Augmentation runs on raw features because
//! the noise mean is a fraction of each raw column mean; after
//! standardization that shift would be identically zero.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standardized feature matrix plus binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    rows: usize,
    cols: usize,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<u8>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let cols = features[0].len();
        if cols == 0 {
            return Err(Error::InvalidShape("zero feature columns".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::InvalidShape(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let mut flat = Vec::with_capacity(features.len() * cols);
        for (k, row) in features.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidShape(format!(
                    "row {k} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("feature row {k}")));
            }
            flat.extend_from_slice(row);
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidLabel(*bad));
        }
        let names = feature_names.unwrap_or_else(|| (0..cols).map(|i| format!("f{i}")).collect());
        if names.len() != cols {
            return Err(Error::InvalidShape(format!(
                "{} feature names for {cols} columns",
                names.len()
            )));
        }
        Ok(Dataset {
            rows: features.len(),
            features: flat,
            cols,
            labels,
            feature_names: names,
        })
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.cols
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.features[k * self.cols..(k + 1) * self.cols]
    }

    pub fn label(&self, k: usize) -> u8 {
        self.labels[k]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Subset by row indices. Does not re-validate, so an empty selection is
    /// representable (operations on it fail with `EmptyDataset`).
    pub fn select(dataset: &Dataset, indices: &[usize]) -> Dataset {
        let mut flat = Vec::with_capacity(indices.len() * dataset.cols);
        let mut labels = Vec::with_capacity(indices.len());
        for &k in indices {
            flat.extend_from_slice(dataset.row(k));
            labels.push(dataset.labels[k]);
        }
        Dataset {
            features: flat,
            rows: indices.len(),
            cols: dataset.cols,
            labels,
            feature_names: dataset.feature_names.clone(),
        }
    }
}

/// Raw numeric table parsed from CSV, target column separated out.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub features: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    /// Delimiter detected from the header line (`b','` or `b';'`).
    pub delimiter: u8,
}

impl RawTable {
    /// Target values as integers; errors on non-integral values.
    pub fn target_as_integers(&self) -> Result<Vec<i64>> {
        self.target
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if v.fract() == 0.0 && v.is_finite() {
                    Ok(v as i64)
                } else {
                    Err(Error::CsvCell {
                        row: k + 2,
                        column: self.target_name.clone(),
                        message: format!("expected integer target, got {v}"),
                    })
                }
            })
            .collect()
    }
}

/// Loads a headered CSV with all-numeric cells; the delimiter (comma or
/// semicolon) is detected from the header line.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<RawTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let header_line = text.lines().next().unwrap_or("");
    let delimiter = if header_line.matches(';').count() > header_line.matches(',').count() {
        b';'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.display().to_string(),
            source: e,
        })?
        .iter()
        .map(|h| h.trim().trim_matches('"').to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Config(format!("{}: empty file", path.display())));
    }
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingTarget {
            target: target_column.to_string(),
            available: headers.clone(),
        })?;

    let mut features = Vec::new();
    let mut target = Vec::new();
    for (row_num, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| Error::CsvCell {
                // +2: one for the header line, one for 1-based numbering.
                row: row_num + 2,
                column: headers.get(col).cloned().unwrap_or_default(),
                message: format!("non-numeric cell {cell:?}"),
            })?;
            if col == target_idx {
                target.push(value);
            } else {
                row.push(value);
            }
        }
        features.push(row);
    }
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let feature_names = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(RawTable {
        feature_names,
        target_name: headers[target_idx].clone(),
        features,
        target,
        delimiter,
    })
}

/// Label 1 iff quality >= threshold.
pub fn encode_labels(quality: &[i64], threshold: i64) -> Result<Vec<u8>> {
    let labels: Vec<u8> = quality
        .iter()
        .map(|&q| u8::from(q >= threshold))
        .collect();
    if let Some(&first) = labels.first() {
        if labels.iter().all(|&y| y == first) {
            return Err(Error::DegenerateLabels {
                threshold,
                label: first,
            });
        }
    }
    Ok(labels)
}

/// Per-column mean and population standard deviation of the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl StandardizationParams {
    /// Fits on the given rows; rejects constant columns.
    pub fn fit(features: &[Vec<f64>], names: &[String]) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let cols = features[0].len();
        let k = features.len() as f64;
        let mut means = vec![0.0; cols];
        for row in features {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= k;
        }
        let mut vars = vec![0.0; cols];
        for row in features {
            for ((v, x), m) in vars.iter_mut().zip(row).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        let mut stds = Vec::with_capacity(cols);
        for (i, v) in vars.iter().enumerate() {
            let std = (v / k).sqrt();
            if std <= 0.0 {
                let name = names
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| format!("column {i}"));
                return Err(Error::ZeroVariance(name));
            }
            stds.push(std);
        }
        Ok(StandardizationParams { means, stds })
    }

    /// Applies `(x - mean) / std` column-wise.
    pub fn apply(&self, features: &[Vec<f64>]) -> Vec<Vec<f64>> {
        features
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.means)
                    .zip(&self.stds)
                    .map(|((x, m), s)| (x - m) / s)
                    .collect()
            })
            .collect()
    }
}

/// Fits params on `features` and returns the standardized copy with them.
pub fn standardize(
    features: &[Vec<f64>],
    names: &[String],
) -> Result<(Vec<Vec<f64>>, StandardizationParams)> {
    let params = StandardizationParams::fit(features, names)?;
    Ok((params.apply(features), params))
}

/// For each original row, emits one extra row with every feature perturbed by
/// a draw from `Normal(fraction * mean_f, fraction * std_f)` computed on the
/// raw columns. Labels are copied; output is originals followed by copies,
/// exactly `2K` rows.
pub fn augment_gaussian<L: Clone>(
    features: &[Vec<f64>],
    labels: &[L],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<L>)> {
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(fraction > 0.0) || !fraction.is_finite() {
        return Err(Error::Config(format!(
            "augmentation fraction must be positive, got {fraction}"
        )));
    }
    if features.len() != labels.len() {
        return Err(Error::InvalidShape(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let cols = features[0].len();
    let k = features.len() as f64;
    let mut means = vec![0.0; cols];
    for row in features {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= k;
    }
    let mut stds = vec![0.0; cols];
    for row in features {
        for ((s, x), m) in stds.iter_mut().zip(row).zip(&means) {
            *s += (x - m) * (x - m);
        }
    }
    for s in &mut stds {
        *s = (*s / k).sqrt();
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out_features = features.to_vec();
    let mut out_labels = labels.to_vec();
    for (row, label) in features.iter().zip(labels) {
        let mut copy = Vec::with_capacity(cols);
        for ((x, m), s) in row.iter().zip(&means).zip(&stds) {
            let noise = if *s > 0.0 {
                let dist = Normal::new(fraction * m, fraction * s)
                    .map_err(|e| Error::Config(format!("noise distribution: {e}")))?;
                dist.sample(&mut rng)
            } else {
                fraction * m
            };
            copy.push(x + noise);
        }
        out_features.push(copy);
        out_labels.push(label.clone());
    }
    Ok((out_features, out_labels))
}

/// Seeded uniform shuffle of `0..k`, then a prefix/suffix cut at
/// `floor(train_ratio * k)`.
pub fn split_indices(k: usize, train_ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::Config(format!(
            "train_ratio must be in (0, 1), got {train_ratio}"
        )));
    }
    let n_train = (train_ratio * k as f64).floor() as usize;
    if n_train == 0 || n_train == k {
        return Err(Error::EmptySplit {
            total: k,
            ratio: train_ratio,
        });
    }
    let mut order: Vec<usize> = (0..k).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let test = order.split_off(n_train);
    Ok((order, test))
}

pub fn split(dataset: &Dataset, train_ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(dataset.len(), train_ratio, seed)?;
    Ok((
        Dataset::select(dataset, &train_idx),
        Dataset::select(dataset, &test_idx),
    ))
}

/// Per-class counts and proportions for the EDA report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub count_class0: usize,
    pub count_class1: usize,
    pub proportion_class0: f64,
    pub proportion_class1: f64,
}

pub fn class_balance_report(labels: &[u8]) -> ClassBalance {
    let count1 = labels.iter().filter(|&&y| y == 1).count();
    let count0 = labels.len() - count1;
    let total = labels.len().max(1) as f64;
    ClassBalance {
        count_class0: count0,
        count_class1: count1,
        proportion_class0: count0 as f64 / total,
        proportion_class1: count1 as f64 / total,
    }
}
