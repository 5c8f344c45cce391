use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of one boosting run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Fraction of features each tree may split on.
    pub feature_fraction: f64,
    pub num_leaves: usize,
    pub min_data_in_leaf: usize,
    pub max_depth: usize,
    /// GOSS: fraction of largest-gradient rows always kept.
    pub goss_a: f64,
    /// GOSS: fraction of rows sampled from the remainder.
    pub goss_b: f64,
    /// L2 penalty on leaf values.
    pub lambda_l2: f64,
    /// Minimum hessian mass per child.
    pub min_sum_hessian: f64,
    pub max_rounds: usize,
    /// Stop after this many rounds without validation improvement.
    pub early_stop: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            feature_fraction: 1.0,
            num_leaves: 20,
            min_data_in_leaf: 20,
            max_depth: 10,
            goss_a: 0.2,
            goss_b: 0.1,
            lambda_l2: 0.0,
            min_sum_hessian: 1e-3,
            max_rounds: 500,
            early_stop: 30,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Structural validity. The narrower ranges explored by random search
    /// live in [`SearchSpace`](super::SearchSpace).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate {} outside (0, 1]", self.learning_rate));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return bad(format!(
                "feature_fraction {} outside (0, 1]",
                self.feature_fraction
            ));
        }
        if self.num_leaves < 1 || self.min_data_in_leaf < 1 || self.max_depth < 1 {
            return bad("num_leaves, min_data_in_leaf and max_depth must be >= 1".into());
        }
        if !(self.goss_a > 0.0 && self.goss_a <= 1.0)
            || !(self.goss_b >= 0.0 && self.goss_a + self.goss_b <= 1.0 + 1e-12)
        {
            return bad(format!(
                "GOSS rates a = {}, b = {} need 0 < a <= 1, b >= 0, a + b <= 1",
                self.goss_a, self.goss_b
            ));
        }
        if !(self.lambda_l2 >= 0.0) || !(self.min_sum_hessian >= 0.0) {
            return bad("lambda_l2 and min_sum_hessian must be >= 0".into());
        }
        if self.max_rounds < 1 || self.early_stop < 1 {
            return bad("max_rounds and early_stop must be >= 1".into());
        }
        Ok(())
    }

    /// GOSS is disabled for the first `1 / learning_rate` rounds while the
    /// gradients are still dominated by the prior.
    pub fn goss_warmup_rounds(&self) -> usize {
        (1.0 / self.learning_rate).floor() as usize
    }

    pub fn uses_goss(&self) -> bool {
        self.goss_a < 1.0
    }
}
