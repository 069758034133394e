//! Ensemble tree structure, node indexing, and per-node logistic activation.
//!
//! Nodes are 1-indexed heap style: node `j` has children `2j` and `2j+1`,
//! an `n`-layer tree has `2^n - 1` nodes and its leaves are exactly
//! `j in [2^(n-1), 2^n - 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sigmoid outputs are clamped to `[SIGMOID_EPS, 1 - SIGMOID_EPS]` so that
/// downstream logs and divisions by the ensemble probability stay finite.
pub const SIGMOID_EPS: f64 = 1e-12;

/// Overflow-safe logistic function, clamped to the open unit interval.
pub fn sigmoid(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite(format!("sigmoid argument {z}")));
    }
    // Branch on sign so the exponential never overflows.
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    Ok(s.clamp(SIGMOID_EPS, 1.0 - SIGMOID_EPS))
}

/// A complete binary tree of logistic units.
///
/// Row `j - 1` of `weights` holds node `j`'s bias followed by the `d`
/// feature coefficients (the bias multiplies an implicit `x_0 = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct EnsembleModel {
    n_layers: u32,
    feature_dim: usize,
    weights: Vec<f64>,
}

/// Wire format: `{"n_layers": int, "feature_dim": int, "weights": [[real]]}`
/// with row order equal to node index order.
#[derive(Serialize, Deserialize)]
struct ModelJson {
    n_layers: u32,
    feature_dim: usize,
    weights: Vec<Vec<f64>>,
}

impl From<EnsembleModel> for ModelJson {
    fn from(m: EnsembleModel) -> Self {
        let cols = m.weight_cols();
        ModelJson {
            n_layers: m.n_layers,
            feature_dim: m.feature_dim,
            weights: m.weights.chunks(cols).map(|r| r.to_vec()).collect(),
        }
    }
}

impl TryFrom<ModelJson> for EnsembleModel {
    type Error = Error;

    fn try_from(j: ModelJson) -> Result<Self> {
        let flat: Vec<f64> = j.weights.into_iter().flatten().collect();
        EnsembleModel::from_weights(j.n_layers, j.feature_dim, flat)
    }
}

impl EnsembleModel {
    /// Builds a model from a flat row-major weight vector of shape
    /// `(2^n - 1) x (d + 1)`.
    pub fn from_weights(n_layers: u32, feature_dim: usize, weights: Vec<f64>) -> Result<Self> {
        if n_layers == 0 {
            return Err(Error::InvalidShape("n_layers must be >= 1".into()));
        }
        if feature_dim == 0 {
            return Err(Error::InvalidShape("feature_dim must be >= 1".into()));
        }
        let nodes = node_count(n_layers);
        let expected = nodes * (feature_dim + 1);
        if weights.len() != expected {
            return Err(Error::InvalidShape(format!(
                "expected {nodes} x {} = {expected} weights, got {}",
                feature_dim + 1,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("model weights".into()));
        }
        Ok(EnsembleModel {
            n_layers,
            feature_dim,
            weights,
        })
    }

    /// All-zero model; useful as a starting point for toy problems.
    pub fn zeros(n_layers: u32, feature_dim: usize) -> Result<Self> {
        let len = node_count(n_layers) * (feature_dim + 1);
        Self::from_weights(n_layers, feature_dim, vec![0.0; len])
    }

    pub fn n_layers(&self) -> u32 {
        self.n_layers
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn node_count(&self) -> usize {
        node_count(self.n_layers)
    }

    fn weight_cols(&self) -> usize {
        self.feature_dim + 1
    }

    /// Weight row of node `j` (1-indexed): `[bias, w_1, ..., w_d]`.
    pub fn node_weights(&self, j: usize) -> Result<&[f64]> {
        self.check_node(j)?;
        let cols = self.weight_cols();
        Ok(&self.weights[(j - 1) * cols..j * cols])
    }

    pub fn weights_flat(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_flat_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn is_leaf(&self, j: usize) -> bool {
        2 * j >= 1 << self.n_layers
    }

    fn check_node(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.node_count() {
            return Err(Error::NodeIndex {
                index: j,
                node_count: self.node_count(),
            });
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Linear term `z_j = b_j + sum_i w_ji x_i` of node `j`.
    pub fn node_linear(&self, j: usize, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let row = self.node_weights(j)?;
        let mut z = row[0];
        for (w, xi) in row[1..].iter().zip(x) {
            z += w * xi;
        }
        Ok(z)
    }

    /// Logistic activation `h_j = sigma(z_j)` of node `j`.
    pub fn node_activation(&self, j: usize, x: &[f64]) -> Result<f64> {
        sigmoid(self.node_linear(j, x)?)
    }

    /// Evaluates every node once and caches `z_j`, `h_j`.
    pub fn all_activations(&self, x: &[f64]) -> Result<ActivationCache> {
        self.check_input(x)?;
        let nodes = self.node_count();
        let mut z = Vec::with_capacity(nodes);
        let mut h = Vec::with_capacity(nodes);
        for j in 1..=nodes {
            let zj = self.node_linear(j, x)?;
            z.push(zj);
            h.push(sigmoid(zj)?);
        }
        Ok(ActivationCache { z, h })
    }
}

/// Per-sample node outputs; index `j - 1` holds node `j`.
#[derive(Debug, Clone)]
pub struct ActivationCache {
    z: Vec<f64>,
    h: Vec<f64>,
}

impl ActivationCache {
    pub fn node_count(&self) -> usize {
        self.h.len()
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z[j - 1]
    }

    pub fn h(&self, j: usize) -> f64 {
        self.h[j - 1]
    }
}

/// `2^n - 1` nodes in an `n`-layer complete tree.
pub fn node_count(n_layers: u32) -> usize {
    (1usize << n_layers) - 1
}

/// First leaf index, `2^(n-1)`; leaves are `first_leaf..=node_count`.
pub fn first_leaf(n_layers: u32) -> usize {
    1usize << (n_layers - 1)
}

pub fn parent(j: usize) -> usize {
    j / 2
}

/// Depth of node `j` counting the root as layer 1: `floor(log2 j) + 1`.
pub fn node_depth(j: usize) -> u32 {
    j.ilog2() + 1
}
