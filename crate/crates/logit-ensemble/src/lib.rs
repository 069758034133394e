//! Dynamic logistic ensembles: a complete binary tree of logistic regression
//! nodes where interior nodes softly route inputs and leaves classify. Label
//! probabilities are evaluated by a recursive expansion over the tree, and
//! training uses fully analytical gradients checked against finite
//! differences and a path-enumeration oracle.

pub mod error;
pub mod gradient;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod probability;
pub mod run;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{ActivationCache, EnsembleModel};
pub use pipeline::Dataset;
pub use trainer::{TrainConfig, TrainResult};
