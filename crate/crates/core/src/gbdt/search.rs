//! Random hyperparameter search with a subject-disjoint inner validation split.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::train::{log_loss, train};
use super::tree::FeatureMatrix;
use crate::error::{Error, Result};

/// Ranges sampled by [`random_search`]. Bounds are inclusive except the lower
/// bound of `feature_fraction`, which is exclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpace {
    pub learning_rate: (f64, f64),
    pub feature_fraction: (f64, f64),
    pub num_leaves: (usize, usize),
    pub min_data_in_leaf: (usize, usize),
    pub max_depth: (usize, usize),
    /// Fraction of training subjects held out for early stopping.
    pub valid_fraction: f64,
    /// Settings that are not searched (GOSS rates, rounds, ...).
    pub base: TrainConfig,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            learning_rate: (0.01, 0.5),
            feature_fraction: (0.0, 1.0),
            num_leaves: (5, 20),
            min_data_in_leaf: (10, 100),
            max_depth: (5, 20),
            valid_fraction: 0.1,
            base: TrainConfig::default(),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("infeasible search space: {what}")));
        let (lr0, lr1) = self.learning_rate;
        if !(lr0 > 0.0 && lr0 <= lr1 && lr1 <= 1.0) {
            return bad("learning_rate needs 0 < lo <= hi <= 1");
        }
        let (ff0, ff1) = self.feature_fraction;
        if !(ff0 >= 0.0 && ff0 <= ff1 && ff1 > 0.0 && ff1 <= 1.0) {
            return bad("feature_fraction needs 0 <= lo <= hi <= 1 with hi > 0");
        }
        for (name, (lo, hi)) in [
            ("num_leaves", self.num_leaves),
            ("min_data_in_leaf", self.min_data_in_leaf),
            ("max_depth", self.max_depth),
        ] {
            if lo < 1 || lo > hi {
                return bad(&format!("{name} needs 1 <= lo <= hi"));
            }
        }
        if !(self.valid_fraction > 0.0 && self.valid_fraction < 1.0) {
            return bad("valid_fraction must lie in (0, 1)");
        }
        self.base.validate()
    }

    /// Draws one configuration. The training seed is drawn as well so that
    /// every trial is reproducible on its own.
    pub fn sample(&self, rng: &mut impl Rng) -> TrainConfig {
        let (ff0, ff1) = self.feature_fraction;
        // `hi - u * (hi - lo)` with u in [0, 1) lands in (lo, hi].
        let ff = ff1 - rng.random::<f64>() * (ff1 - ff0);
        TrainConfig {
            learning_rate: rng.random_range(self.learning_rate.0..=self.learning_rate.1),
            feature_fraction: ff.max(f64::MIN_POSITIVE),
            num_leaves: rng.random_range(self.num_leaves.0..=self.num_leaves.1),
            min_data_in_leaf: rng.random_range(self.min_data_in_leaf.0..=self.min_data_in_leaf.1),
            max_depth: rng.random_range(self.max_depth.0..=self.max_depth.1),
            seed: rng.random(),
            ..self.base.clone()
        }
    }
}

/// Row indices of an inner train/validation split.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerSplit {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub valid_groups: Vec<u32>,
}

/// Holds out `max(1, round(fraction * subjects))` whole subjects. Draws are
/// repeated until both sides contain at least two samples of each class.
pub fn inner_split(y: &[u8], groups: &[u32], fraction: f64, seed: u64) -> Result<InnerSplit> {
    if y.len() != groups.len() {
        return Err(Error::invalid("labels and groups differ in length"));
    }
    let subjects: Vec<u32> = groups.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if subjects.len() < 2 {
        return Err(Error::invalid(
            "an inner split needs at least two training subjects",
        ));
    }
    let hold = ((fraction * subjects.len() as f64).round() as usize).clamp(1, subjects.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let balanced = |idx: &[usize]| {
        let pos = idx.iter().filter(|&&i| y[i] == 1).count();
        pos >= 2 && idx.len() - pos >= 2
    };
    for _ in 0..200 {
        let mut order = subjects.clone();
        order.shuffle(&mut rng);
        let held: BTreeSet<u32> = order[..hold].iter().copied().collect();
        let (valid, train): (Vec<usize>, Vec<usize>) =
            (0..y.len()).partition(|&i| held.contains(&groups[i]));
        if balanced(&train) && balanced(&valid) {
            return Ok(InnerSplit {
                train,
                valid,
                valid_groups: held.into_iter().collect(),
            });
        }
    }
    Err(Error::DegenerateLabels(
        "no subject-disjoint inner split with both classes on each side".into(),
    ))
}

/// One evaluated configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTrial {
    pub config: TrainConfig,
    pub valid_loss: f64,
    pub best_iteration: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Winning configuration with `max_rounds` set to its best iteration.
    pub best: TrainConfig,
    pub best_loss: f64,
    pub best_iteration: usize,
    pub trials: Vec<SearchTrial>,
}

/// Samples `iterations` configurations and scores each by validation log
/// loss at its best iteration on one subject-disjoint inner split. The lowest
/// loss wins, the earliest trial on ties. Trials run in parallel but the
/// result depends only on `seed`.
pub fn random_search(
    x: &FeatureMatrix,
    y: &[u8],
    groups: &[u32],
    space: &SearchSpace,
    iterations: usize,
    seed: u64,
) -> Result<SearchResult> {
    if iterations == 0 {
        return Err(Error::invalid("random search needs at least one iteration"));
    }
    space.validate()?;
    if y.len() != x.n_rows() {
        return Err(Error::invalid("labels and rows differ in length"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split = inner_split(y, groups, space.valid_fraction, rng.random())?;
    let configs: Vec<TrainConfig> = (0..iterations).map(|_| space.sample(&mut rng)).collect();

    let tx = x.select_rows(&split.train);
    let ty: Vec<u8> = split.train.iter().map(|&i| y[i]).collect();
    let vx = x.select_rows(&split.valid);
    let vy: Vec<u8> = split.valid.iter().map(|&i| y[i]).collect();

    let trials: Vec<SearchTrial> = configs
        .into_par_iter()
        .map(|config| {
            let model = train(&tx, &ty, Some((&vx, &vy)), &config)?;
            let probs: Vec<f64> = model
                .predict_matrix(&vx)?
                .into_iter()
                .map(|p| p.probability)
                .collect();
            Ok(SearchTrial {
                valid_loss: log_loss(&vy, &probs),
                best_iteration: model.best_iteration,
                config,
            })
        })
        .collect::<Result<_>>()?;

    let winner = trials
        .iter()
        .fold(None, |acc: Option<&SearchTrial>, t| match acc {
            Some(b) if b.valid_loss <= t.valid_loss => acc,
            _ => Some(t),
        })
        .expect("at least one trial");
    let mut best = winner.config.clone();
    best.max_rounds = winner.best_iteration.max(1);
    Ok(SearchResult {
        best,
        best_loss: winner.valid_loss,
        best_iteration: winner.best_iteration,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (FeatureMatrix, Vec<u8>, Vec<u32>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut g = Vec::new();
        for s in 0..10u32 {
            for t in 0..20 {
                let v = ((s * 31 + t * 17) % 29) as f64 / 29.0;
                rows.push(vec![v, ((t * 7) % 5) as f64]);
                y.push(u8::from(v > 0.45));
                g.push(s);
            }
        }
        (FeatureMatrix::from_rows(&rows).unwrap(), y, g)
    }

    #[test]
    fn inner_split_is_subject_disjoint() {
        let (_, y, g) = data();
        let s = inner_split(&y, &g, 0.1, 4).unwrap();
        assert_eq!(s.valid_groups.len(), 1);
        for &i in &s.train {
            assert!(!s.valid_groups.contains(&g[i]));
        }
        assert_eq!(s.train.len() + s.valid.len(), y.len());
    }

    #[test]
    fn one_iteration_returns_the_sampled_config() {
        let (x, y, g) = data();
        let space = SearchSpace {
            min_data_in_leaf: (10, 20),
            ..Default::default()
        };
        let r = random_search(&x, &y, &g, &space, 1, 3).unwrap();
        assert_eq!(r.trials.len(), 1);
        let mut expect = r.trials[0].config.clone();
        expect.max_rounds = r.trials[0].best_iteration.max(1);
        assert_eq!(r.best, expect);
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y, g) = data();
        let space = SearchSpace {
            min_data_in_leaf: (10, 20),
            ..Default::default()
        };
        let a = random_search(&x, &y, &g, &space, 6, 11).unwrap();
        let b = random_search(&x, &y, &g, &space, 6, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_space_rejected() {
        let (x, y, g) = data();
        let space = SearchSpace {
            num_leaves: (10, 5),
            ..Default::default()
        };
        assert!(matches!(
            random_search(&x, &y, &g, &space, 3, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(random_search(&x, &y, &g, &SearchSpace::default(), 0, 0).is_err());
    }

    #[test]
    fn sampled_values_stay_in_range() {
        let space = SearchSpace::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let c = space.sample(&mut rng);
            assert!((0.01..=0.5).contains(&c.learning_rate));
            assert!(c.feature_fraction > 0.0 && c.feature_fraction <= 1.0);
            assert!((5..=20).contains(&c.num_leaves));
            assert!((10..=100).contains(&c.min_data_in_leaf));
            assert!((5..=20).contains(&c.max_depth));
            c.validate().unwrap();
        }
    }
}
