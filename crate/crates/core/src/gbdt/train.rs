//! Boosting loop for binary log loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::goss::goss_sample;
use super::grow::grow_tree;
use super::tree::{sigmoid, FeatureMatrix, GbdtModel};
use crate::error::{Error, Result};

/// Probabilities are clipped to `[EPS, 1 - EPS]` before taking logs.
const EPS: f64 = 1e-15;

/// Mean binary log loss of probabilities `p` against labels in {0, 1}.
pub fn log_loss(y: &[u8], p: &[f64]) -> f64 {
    let total: f64 = y
        .iter()
        .zip(p)
        .map(|(&yi, &pi)| {
            let pi = pi.clamp(EPS, 1.0 - EPS);
            if yi == 1 {
                -pi.ln()
            } else {
                -(1.0 - pi).ln()
            }
        })
        .sum();
    total / y.len().max(1) as f64
}

/// Per-round losses recorded while boosting. Index `i` is the loss after
/// `i + 1` trees.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
}

fn check_labels(y: &[u8], rows: usize, what: &str) -> Result<()> {
    if y.len() != rows {
        return Err(Error::invalid(format!(
            "{what} has {} labels for {rows} rows",
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::invalid(format!("{what} label {bad} is not 0 or 1")));
    }
    Ok(())
}

/// Trains a model whose prior is the log-odds of the positive rate in `y`.
/// Feature names default to `f0, f1, ...`.
pub fn train(
    x: &FeatureMatrix,
    y: &[u8],
    valid: Option<(&FeatureMatrix, &[u8])>,
    cfg: &TrainConfig,
) -> Result<GbdtModel> {
    train_with_history(x, y, valid, cfg).map(|(m, _)| m)
}

/// Like [`train`] and also returns the loss curves.
pub fn train_with_history(
    x: &FeatureMatrix,
    y: &[u8],
    valid: Option<(&FeatureMatrix, &[u8])>,
    cfg: &TrainConfig,
) -> Result<(GbdtModel, TrainHistory)> {
    check_labels(y, x.n_rows(), "training set")?;
    let positives = y.iter().filter(|&&v| v == 1).count();
    let negatives = y.len() - positives;
    if positives < 2 || negatives < 2 {
        return Err(Error::DegenerateLabels(format!(
            "training set has {positives} positive and {negatives} negative samples; \
             at least 2 of each are required"
        )));
    }
    let p = positives as f64 / y.len() as f64;
    train_from_score(x, y, valid, cfg, (p / (1.0 - p)).ln())
}

/// Boosts from an explicit starting margin. Unlike [`train`] this accepts
/// single-class labels.
pub fn train_from_score(
    x: &FeatureMatrix,
    y: &[u8],
    valid: Option<(&FeatureMatrix, &[u8])>,
    cfg: &TrainConfig,
    base_score: f64,
) -> Result<(GbdtModel, TrainHistory)> {
    cfg.validate()?;
    check_labels(y, x.n_rows(), "training set")?;
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::invalid("training matrix is empty"));
    }
    if !base_score.is_finite() {
        return Err(Error::invalid("base score must be finite"));
    }
    if let Some((vx, vy)) = valid {
        check_labels(vy, vx.n_rows(), "validation set")?;
        if vx.n_cols() != x.n_cols() {
            return Err(Error::invalid(format!(
                "validation set has {} features, training set {}",
                vx.n_cols(),
                x.n_cols()
            )));
        }
        if vx.n_rows() == 0 {
            return Err(Error::invalid("validation set is empty"));
        }
    }

    let n = x.n_rows();
    let eta = cfg.learning_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut margins = vec![base_score; n];
    let mut valid_margins = valid.map(|(vx, _)| vec![base_score; vx.n_rows()]);
    let mut trees = Vec::new();
    let mut history = TrainHistory::default();
    let mut best = (f64::INFINITY, 0usize);
    let warmup = cfg.goss_warmup_rounds();

    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for round in 0..cfg.max_rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - f64::from(y[i]);
            hess[i] = p * (1.0 - p);
        }
        let goss_seed: u64 = rng.random();
        let tree_seed: u64 = rng.random();
        let weights = if cfg.uses_goss() && round >= warmup {
            goss_sample(&grad, cfg.goss_a, cfg.goss_b, goss_seed)?.dense_weights(n)
        } else {
            vec![1.0; n]
        };
        let tree = grow_tree(x, &grad, &hess, &weights, cfg, tree_seed)?;

        for (i, m) in margins.iter_mut().enumerate() {
            *m += eta * tree.predict(x.row(i));
        }
        let probs: Vec<f64> = margins.iter().map(|&m| sigmoid(m)).collect();
        history.train_loss.push(log_loss(y, &probs));
        trees.push(tree);

        if let (Some((vx, vy)), Some(vm)) = (valid, valid_margins.as_mut()) {
            let last = trees.last().expect("tree just pushed");
            for (i, m) in vm.iter_mut().enumerate() {
                *m += eta * last.predict(vx.row(i));
            }
            let vp: Vec<f64> = vm.iter().map(|&m| sigmoid(m)).collect();
            let loss = log_loss(vy, &vp);
            history.valid_loss.push(loss);
            if loss < best.0 {
                best = (loss, trees.len());
            } else if trees.len() - best.1 >= cfg.early_stop {
                break;
            }
        }
    }

    let best_iteration = if valid.is_some() { best.1 } else { trees.len() };
    let model = GbdtModel {
        feature_names: (0..x.n_cols()).map(|i| format!("f{i}")).collect(),
        learning_rate: eta,
        base_score,
        best_iteration,
        trees,
    };
    Ok((model, history))
}

impl GbdtModel {
    /// Replaces the feature names; the count must match the training width.
    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.feature_names.len() {
            return Err(Error::invalid(format!(
                "{} feature names for a model with {} features",
                names.len(),
                self.feature_names.len()
            )));
        }
        self.feature_names = names;
        Ok(self)
    }
}
