//! Gradient-boosted regression trees for binary log loss.
//!
//! Trees grow leaf-wise with exact split enumeration. Each round may
//! subsample rows with GOSS and features with a per-tree subset. Every node
//! stores its cover so [`crate::treeshap`] can explain the model.

mod config;
mod goss;
mod grow;
mod search;
mod train;
mod tree;

pub use config::TrainConfig;
pub use goss::{goss_sample, GossSample};
pub use grow::{feature_subset_size, grow_tree};
pub use search::{inner_split, random_search, InnerSplit, SearchResult, SearchSpace, SearchTrial};
pub use train::{log_loss, train, train_from_score, train_with_history, TrainHistory};
pub use tree::{sigmoid, FeatureMatrix, GbdtModel, Prediction, TreeNode};
