//! Ensemble label probability `P(y|x, n)`, computed two ways: the recursive
//! expansion used everywhere in the library, and an independent
//! path-enumeration oracle used for verification.

use crate::error::{Error, Result};
use crate::model::{first_leaf, node_count, ActivationCache, EnsembleModel};

/// `p_j = h_j^y (1-h_j)^(1-y)`: the probability a leaf assigns to label `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafTerm {
    pub value: f64,
}

/// `p_wedge(n, j)`: product of routing probabilities on the root-to-`j` path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathProbability {
    pub value: f64,
}

fn check_label(y: u8) -> Result<()> {
    if y > 1 {
        return Err(Error::InvalidLabel(y));
    }
    Ok(())
}

pub(crate) fn leaf_term_raw(h: f64, y: u8) -> f64 {
    if y == 1 {
        h
    } else {
        1.0 - h
    }
}

pub fn leaf_term(h: f64, y: u8) -> Result<LeafTerm> {
    check_label(y)?;
    Ok(LeafTerm {
        value: leaf_term_raw(h, y),
    })
}

/// Recursive value of the subtree rooted at `j`: a leaf contributes its leaf
/// term, an interior node `j` contributes `h_j (L - R) + R` where `L`, `R`
/// are the values of subtrees `2j` and `2j+1`.
pub(crate) fn subtree_value(cache: &ActivationCache, n_layers: u32, j: usize, y: u8) -> f64 {
    if j >= first_leaf(n_layers) {
        leaf_term_raw(cache.h(j), y)
    } else {
        let left = subtree_value(cache, n_layers, 2 * j, y);
        let right = subtree_value(cache, n_layers, 2 * j + 1, y);
        cache.h(j) * (left - right) + right
    }
}

/// `P(y|x, n)` by the recursive expansion, starting from the root.
pub fn label_probability(model: &EnsembleModel, x: &[f64], y: u8) -> Result<f64> {
    check_label(y)?;
    let cache = model.all_activations(x)?;
    Ok(subtree_value(&cache, model.n_layers(), 1, y))
}

/// `P(1|x, n)`, the in-group probability.
pub fn class1_probability(model: &EnsembleModel, x: &[f64]) -> Result<f64> {
    label_probability(model, x, 1)
}

/// Path probability of node `j` in an `n`-layer ensemble:
/// `p_wedge(n, 1) = 1` and
/// `p_wedge(n, j) = p_wedge(n-1, j/2) * h_{j/2}^((1+j) mod 2) * (1-h_{j/2})^(j mod 2)`.
pub fn path_probability(cache: &ActivationCache, n_layers: u32, j: usize) -> Result<PathProbability> {
    let nodes = node_count(n_layers);
    if j == 0 || j > nodes || nodes > cache.node_count() {
        return Err(Error::NodeIndex {
            index: j,
            node_count: nodes,
        });
    }
    Ok(PathProbability {
        value: path_probability_raw(cache, j),
    })
}

pub(crate) fn path_probability_raw(cache: &ActivationCache, j: usize) -> f64 {
    if j == 1 {
        1.0
    } else {
        let p = j / 2;
        let routing = if j % 2 == 0 {
            cache.h(p)
        } else {
            1.0 - cache.h(p)
        };
        path_probability_raw(cache, p) * routing
    }
}

/// Independent oracle: enumerates every root-to-leaf path explicitly and sums
/// `path probability x leaf term`, without the recursive rewrite.
pub fn mixture_oracle(model: &EnsembleModel, x: &[f64], y: u8) -> Result<f64> {
    check_label(y)?;
    let cache = model.all_activations(x)?;
    let n = model.n_layers();
    let mut total = 0.0;
    for leaf in first_leaf(n)..=node_count(n) {
        // Walk the path root -> leaf using the bits of the leaf index, most
        // significant first: bit 0 routes left (through h), bit 1 right.
        let mut pp = 1.0;
        for level in (0..n - 1).rev() {
            let ancestor = leaf >> (level + 1);
            let went_right = (leaf >> level) & 1 == 1;
            pp *= if went_right {
                1.0 - cache.h(ancestor)
            } else {
                cache.h(ancestor)
            };
        }
        total += pp * leaf_term_raw(cache.h(leaf), y);
    }
    Ok(total)
}
