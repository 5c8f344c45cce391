//! Leaf-wise regression tree growth with exact split enumeration.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::tree::{FeatureMatrix, TreeNode};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
struct SplitCandidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Leaf {
    /// Row indices sorted by each candidate feature (same order as
    /// `Grower::features`).
    sorted: Vec<Vec<usize>>,
    grad: f64,
    hess: f64,
    depth: usize,
    node: usize,
    best: Option<SplitCandidate>,
}

enum Slot {
    Leaf { value: f64, cover: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    grad: &'a [f64],
    hess: &'a [f64],
    weights: &'a [f64],
    cfg: &'a TrainConfig,
    features: Vec<usize>,
}

/// Number of features each tree samples.
pub fn feature_subset_size(n_features: usize, fraction: f64) -> usize {
    ((fraction * n_features as f64).round() as usize).clamp(1, n_features.max(1))
}

/// Grows one tree on weighted gradient statistics. Rows with zero weight are
/// ignored. The leaf with the highest gain
/// `G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)` is split next until the leaf
/// budget, depth limit, child-size limits or a non-positive gain stop growth.
/// Leaves output the Newton step `-G / (H + l)`.
pub fn grow_tree(
    x: &FeatureMatrix,
    grad: &[f64],
    hess: &[f64],
    weights: &[f64],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TreeNode> {
    let n = x.n_rows();
    if grad.len() != n || hess.len() != n || weights.len() != n {
        return Err(Error::invalid("gradient, hessian and weight lengths must match rows"));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::invalid("sample weights must be non-negative"));
    }
    let rows: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    if rows.is_empty() || x.n_cols() == 0 {
        return Err(Error::invalid("cannot grow a tree on empty data"));
    }

    let mut features: Vec<usize> = if cfg.feature_fraction >= 1.0 {
        (0..x.n_cols()).collect()
    } else {
        let k = feature_subset_size(x.n_cols(), cfg.feature_fraction);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        index::sample(&mut rng, x.n_cols(), k).into_vec()
    };
    features.sort_unstable();

    let grower = Grower {
        x,
        grad,
        hess,
        weights,
        cfg,
        features,
    };
    Ok(grower.run(rows))
}

impl Grower<'_> {
    fn run(&self, rows: Vec<usize>) -> TreeNode {
        let sorted: Vec<Vec<usize>> = self
            .features
            .iter()
            .map(|&f| {
                let mut r = rows.clone();
                r.sort_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)));
                r
            })
            .collect();

        let mut slots: Vec<Slot> = Vec::new();
        let mut leaves: Vec<Leaf> = vec![self.make_leaf(sorted, 0, &mut slots)];

        while leaves.len() < self.cfg.num_leaves {
            // Highest gain wins; the earliest-created leaf wins ties.
            let Some(pick) = leaves
                .iter()
                .enumerate()
                .filter_map(|(i, l)| l.best.map(|b| (i, b.gain)))
                .fold(None, |acc: Option<(usize, f64)>, (i, g)| match acc {
                    Some((_, best)) if best >= g => acc,
                    _ => Some((i, g)),
                })
                .map(|p| p.0)
            else {
                break;
            };
            let leaf = leaves.remove(pick);
            let split = leaf.best.expect("picked leaf has a split");
            let col = self.features.binary_search(&split.feature).expect("feature in subset");

            let (left_sorted, right_sorted): (Vec<Vec<usize>>, Vec<Vec<usize>>) = leaf
                .sorted
                .iter()
                .map(|list| {
                    list.iter()
                        .partition(|&&r| self.x.get(r, split.feature) <= split.threshold)
                })
                .unzip();
            debug_assert!(left_sorted[col].len() >= self.cfg.min_data_in_leaf);

            let left = self.make_leaf(left_sorted, leaf.depth + 1, &mut slots);
            let right = self.make_leaf(right_sorted, leaf.depth + 1, &mut slots);
            slots[leaf.node] = Slot::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: left.node,
                right: right.node,
            };
            // Keep creation order so tie-breaking stays deterministic.
            leaves.insert(pick, right);
            leaves.insert(pick, left);
        }
        build(&slots, 0)
    }

    fn make_leaf(&self, sorted: Vec<Vec<usize>>, depth: usize, slots: &mut Vec<Slot>) -> Leaf {
        let rows = &sorted[0];
        let (mut g, mut h, mut cover) = (0.0, 0.0, 0.0);
        for &r in rows {
            let w = self.weights[r];
            g += w * self.grad[r];
            h += w * self.hess[r];
            cover += w;
        }
        let denom = h + self.cfg.lambda_l2;
        let value = if denom > 0.0 { -g / denom } else { 0.0 };
        let node = slots.len();
        slots.push(Slot::Leaf { value, cover });
        let mut leaf = Leaf {
            sorted,
            grad: g,
            hess: h,
            depth,
            node,
            best: None,
        };
        if depth < self.cfg.max_depth {
            leaf.best = self.best_split(&leaf);
        }
        leaf
    }

    fn best_split(&self, leaf: &Leaf) -> Option<SplitCandidate> {
        let min_data = self.cfg.min_data_in_leaf;
        let count = leaf.sorted[0].len();
        if count < 2 * min_data {
            return None;
        }
        let lambda = self.cfg.lambda_l2;
        let parent_score = score(leaf.grad, leaf.hess, lambda);
        // Gains this close to zero are rounding noise from a constant
        // gradient/hessian ratio.
        let min_gain = 1e-10 * parent_score.abs().max(1.0);
        let mut best: Option<SplitCandidate> = None;

        for (col, &feature) in self.features.iter().enumerate() {
            let list = &leaf.sorted[col];
            let (mut gl, mut hl) = (0.0, 0.0);
            for pos in 0..count - 1 {
                let r = list[pos];
                let w = self.weights[r];
                gl += w * self.grad[r];
                hl += w * self.hess[r];
                let left_n = pos + 1;
                if left_n < min_data {
                    continue;
                }
                if count - left_n < min_data {
                    break;
                }
                let lo = self.x.get(r, feature);
                let hi = self.x.get(list[pos + 1], feature);
                if hi <= lo {
                    continue;
                }
                let gr = leaf.grad - gl;
                let hr = leaf.hess - hl;
                if hl < self.cfg.min_sum_hessian || hr < self.cfg.min_sum_hessian {
                    continue;
                }
                let gain = score(gl, hl, lambda) + score(gr, hr, lambda) - parent_score;
                if gain > min_gain && best.is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        feature,
                        threshold: midpoint(lo, hi),
                        gain,
                    });
                }
            }
        }
        best
    }
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        g * g / d
    } else {
        0.0
    }
}

/// Midpoint of two distinct adjacent values, guaranteed to satisfy
/// `lo <= t < hi` so the `<=` routing rule separates them.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi || m < lo {
        lo
    } else {
        m
    }
}

/// Converts the slot arena into a boxed tree; internal covers are the exact
/// sums of their children.
fn build(slots: &[Slot], i: usize) -> TreeNode {
    match slots[i] {
        Slot::Leaf { value, cover } => TreeNode::leaf(value, cover),
        Slot::Split {
            feature,
            threshold,
            left,
            right,
        } => TreeNode::split(feature, threshold, build(slots, left), build(slots, right)),
    }
}
