//! Gradient-boosted regression trees: second-order squared-error objective,
//! exact greedy splits, L1/L2 leaf regularization, row and column
//! subsampling, k-fold cross-validation and grid search.

mod builder;
mod cv;
mod metrics;
mod model;
mod params;
mod tree;

pub use builder::{best_split, fit, leaf_weight, split_gain, SplitCandidate, MIN_SPLIT_GAIN};
pub use cv::{fold_assignment, grid_search, kfold_cv, CvResult, GridEntry, GridReport};
pub use metrics::{r2, rmse};
pub use model::{GbtModel, ModelMeta};
pub use params::{HyperParams, ParamGrid};
pub use tree::{DefaultDirection, Node, Tree};

#[cfg(test)]
mod tests;
