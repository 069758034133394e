//! Cost, log-likelihood, and the analytical per-node gradients, with a
//! central finite-difference oracle for verification.
//!
//! Per data point the cost is `-log P(y|x, n)`. Its gradient with respect to
//! node `j`'s weight on `x_i` is
//!
//! * leaf `j`:      `-pw(j) * p_j * (y - h_j) * x_i / P`
//! * interior `j`:  `-pw(j) * h_j (1 - h_j) * (S_2j - S_2j+1) * x_i / P`
//!
//! where `pw(j)` is the path probability to `j` and `S_k` is the label
//! probability of the subtree rooted at `k` (the fixed point of the rewrite
//! `p_k => h_k (p_2k - p_2k+1) + p_2k+1`).

use crate::error::{Error, Result};
use crate::model::{node_count, ActivationCache, EnsembleModel, SIGMOID_EPS};
use crate::pipeline::Dataset;
use crate::probability::{
    label_probability, leaf_term_raw, path_probability_raw, subtree_value,
};

/// `S_j`: fully expanded label probability of the subtree rooted at `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubtreeLabelProbability {
    pub value: f64,
}

/// Gradient of the summed cost, shape `(2^n - 1) x (d + 1)`; entry
/// `(j - 1, i)` is `d cost / d w_ji` with `i = 0` the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl GradientMatrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        GradientMatrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry for node `j` (1-indexed) and weight `i` (0 = bias).
    pub fn entry(&self, j: usize, i: usize) -> f64 {
        self.values[(j - 1) * self.cols + i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn add_assign(&mut self, other: &GradientMatrix) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn clamp_probability(p: f64) -> f64 {
    p.max(SIGMOID_EPS)
}

/// `-sum_k log P(y_k|x_k, n)` over the dataset, with `P` clamped away from 0.
pub fn cost(model: &EnsembleModel, dataset: &Dataset) -> Result<f64> {
    if dataset.len() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for k in 0..dataset.len() {
        let p = label_probability(model, dataset.row(k), dataset.label(k))?;
        total -= clamp_probability(p).ln();
    }
    Ok(total)
}

/// Log of the likelihood product; identically `-cost`.
pub fn log_likelihood(model: &EnsembleModel, dataset: &Dataset) -> Result<f64> {
    Ok(-cost(model, dataset)?)
}

/// `S_j` for the subtree rooted at `j`, given a per-sample cache and label.
pub fn subtree_label_probability(
    cache: &ActivationCache,
    y: u8,
    n_layers: u32,
    j: usize,
) -> Result<SubtreeLabelProbability> {
    let nodes = node_count(n_layers);
    if j == 0 || j > nodes || nodes > cache.node_count() {
        return Err(Error::NodeIndex {
            index: j,
            node_count: nodes,
        });
    }
    if y > 1 {
        return Err(Error::InvalidLabel(y));
    }
    Ok(SubtreeLabelProbability {
        value: subtree_value(cache, n_layers, j, y),
    })
}

/// Analytical gradient of one data point's cost.
pub fn point_gradient(
    model: &EnsembleModel,
    cache: &ActivationCache,
    x: &[f64],
    y: u8,
) -> Result<GradientMatrix> {
    let nodes = model.node_count();
    if cache.node_count() != nodes {
        return Err(Error::InvalidShape(format!(
            "cache holds {} nodes, model has {nodes}",
            cache.node_count()
        )));
    }
    if x.len() != model.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.feature_dim(),
            actual: x.len(),
        });
    }
    if y > 1 {
        return Err(Error::InvalidLabel(y));
    }

    let cols = model.feature_dim() + 1;

    // Subtree label probabilities, leaves upward; index j-1 holds S_j.
    let mut subtree = vec![0.0; nodes];
    for j in (1..=nodes).rev() {
        subtree[j - 1] = if model.is_leaf(j) {
            leaf_term_raw(cache.h(j), y)
        } else {
            let left = subtree[2 * j - 1];
            let right = subtree[2 * j];
            cache.h(j) * (left - right) + right
        };
    }
    let p_total = clamp_probability(subtree[0]);

    let mut grad = GradientMatrix::zeros(nodes, cols);
    for j in 1..=nodes {
        let pw = path_probability_raw(cache, j);
        let h = cache.h(j);
        let coeff = if model.is_leaf(j) {
            let p_j = leaf_term_raw(h, y);
            -pw * p_j * (f64::from(y) - h) / p_total
        } else {
            -pw * h * (1.0 - h) * (subtree[2 * j - 1] - subtree[2 * j]) / p_total
        };
        let row = &mut grad.values[(j - 1) * cols..j * cols];
        row[0] = coeff;
        for (slot, xi) in row[1..].iter_mut().zip(x) {
            *slot = coeff * xi;
        }
    }
    Ok(grad)
}

/// Sum of per-point gradients over the dataset, accumulated in sample order
/// so results are bit-reproducible.
pub fn batch_gradient(model: &EnsembleModel, dataset: &Dataset) -> Result<GradientMatrix> {
    if dataset.len() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut total = GradientMatrix::zeros(model.node_count(), model.feature_dim() + 1);
    for k in 0..dataset.len() {
        let x = dataset.row(k);
        let cache = model.all_activations(x)?;
        let g = point_gradient(model, &cache, x, dataset.label(k))?;
        total.add_assign(&g);
    }
    Ok(total)
}

/// Central-difference gradient of `cost`, one perturbation pair per weight.
pub fn finite_difference_gradient(
    model: &EnsembleModel,
    dataset: &Dataset,
    step: f64,
) -> Result<GradientMatrix> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::Config(format!("step must be positive, got {step}")));
    }
    let nodes = model.node_count();
    let cols = model.feature_dim() + 1;
    let mut grad = GradientMatrix::zeros(nodes, cols);
    let mut probe = model.clone();
    for idx in 0..nodes * cols {
        let w0 = probe.weights_flat()[idx];
        // Difference the per-point costs before summing: subtracting two
        // full-batch sums first would cancel away most of the mantissa.
        let mut delta = 0.0;
        for k in 0..dataset.len() {
            let x = dataset.row(k);
            let y = dataset.label(k);
            probe.weights_flat_mut()[idx] = w0 + step;
            let plus = clamp_probability(label_probability(&probe, x, y)?).ln();
            probe.weights_flat_mut()[idx] = w0 - step;
            let minus = clamp_probability(label_probability(&probe, x, y)?).ln();
            delta += minus - plus;
        }
        probe.weights_flat_mut()[idx] = w0;
        grad.values[idx] = delta / (2.0 * step);
    }
    Ok(grad)
}

/// Largest relative error between two gradients, ignoring entries whose
/// reference magnitude is at or below `floor`.
pub fn max_relative_error(a: &GradientMatrix, b: &GradientMatrix, floor: f64) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .filter(|(x, y)| x.abs().max(y.abs()) > floor)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()))
        .fold(0.0, f64::max)
}
