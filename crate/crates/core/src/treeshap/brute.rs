//! Exhaustive Shapley evaluation over all feature subsets.

use crate::error::{Error, Result};
use crate::gbdt::{GbdtModel, TreeNode};

use super::{InteractionMatrix, ShapExplanation};

/// Largest feature count [`brute_force_shapley`] accepts.
pub const BRUTE_FORCE_MAX_FEATURES: usize = 20;

/// Expected tree output when only features in `mask` are known.
fn tree_value(node: &TreeNode, x: &[f64], mask: u32) -> f64 {
    match node {
        TreeNode::Leaf { value, .. } => *value,
        TreeNode::Split {
            feature,
            threshold,
            cover,
            left,
            right,
        } => {
            if mask >> feature & 1 == 1 {
                if x[*feature] <= *threshold {
                    tree_value(left, x, mask)
                } else {
                    tree_value(right, x, mask)
                }
            } else {
                (left.cover() * tree_value(left, x, mask) + right.cover() * tree_value(right, x, mask))
                    / cover
            }
        }
    }
}

/// `v(T)` for every subset `T`, indexed by bitmask.
fn coalition_values(model: &GbdtModel, x: &[f64]) -> Result<Vec<f64>> {
    let n = model.n_features();
    if n > BRUTE_FORCE_MAX_FEATURES {
        return Err(Error::Capacity(format!(
            "brute-force Shapley enumerates 2^{n} subsets; at most {BRUTE_FORCE_MAX_FEATURES} features are supported"
        )));
    }
    if x.len() != n {
        return Err(Error::invalid(format!(
            "input has {} features, model expects {n}",
            x.len()
        )));
    }
    model.validate()?;
    Ok((0..1u32 << n)
        .map(|mask| {
            let sum: f64 = model.active_trees().iter().map(|t| tree_value(t, x, mask)).sum();
            model.base_score + model.learning_rate * sum
        })
        .collect())
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

/// Shapley values by direct enumeration of
/// `phi_i = sum_T |T|! (n - |T| - 1)! / n! * (v(T + i) - v(T))`.
pub fn brute_force_shapley(model: &GbdtModel, x: &[f64]) -> Result<ShapExplanation> {
    let v = coalition_values(model, x)?;
    let n = model.n_features();
    let fact = factorials(n);
    let mut values = vec![0.0; n];
    for (i, phi) in values.iter_mut().enumerate() {
        let bit = 1u32 << i;
        let mut weight_sum = 0.0;
        for mask in (0..1u32 << n).filter(|m| m & bit == 0) {
            let s = mask.count_ones() as usize;
            let w = fact[s] * fact[n - s - 1] / fact[n];
            weight_sum += w;
            *phi += w * (v[(mask | bit) as usize] - v[mask as usize]);
        }
        assert!(
            (weight_sum - 1.0).abs() < 1e-9,
            "Shapley weights sum to {weight_sum}"
        );
    }
    Ok(ShapExplanation {
        feature_names: model.feature_names.clone(),
        values,
        base_value: v[0],
    })
}

/// Shapley interaction index by enumeration:
/// `phi_ij = sum_T |T|! (n - |T| - 2)! / (2 (n - 1)!) * delta_ij(T)` for
/// `i != j`, with the diagonal completing each row to `phi_i`.
pub fn brute_force_interactions(model: &GbdtModel, x: &[f64]) -> Result<InteractionMatrix> {
    let v = coalition_values(model, x)?;
    let n = model.n_features();
    let phi = brute_force_shapley(model, x)?.values;
    let fact = factorials(n);
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (bi, bj) = (1u32 << i, 1u32 << j);
            let mut total = 0.0;
            for mask in (0..1u32 << n).filter(|m| m & (bi | bj) == 0) {
                let s = mask.count_ones() as usize;
                let w = fact[s] * fact[n - s - 2] / (2.0 * fact[n - 1]);
                let delta = v[(mask | bi | bj) as usize] - v[(mask | bi) as usize]
                    - v[(mask | bj) as usize]
                    + v[mask as usize];
                total += w * delta;
            }
            m[i][j] = total;
            m[j][i] = total;
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[i][j]).sum();
        m[i][i] = phi[i] - off;
    }
    Ok(InteractionMatrix {
        feature_names: model.feature_names.clone(),
        values: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_feature_two_subsets() {
        let t = TreeNode::split(0, 1.0, TreeNode::leaf(2.0, 3.0), TreeNode::leaf(-2.0, 1.0));
        let m = GbdtModel {
            feature_names: vec!["a".into()],
            learning_rate: 1.0,
            base_score: 0.0,
            best_iteration: 1,
            trees: vec![t],
        };
        let e = brute_force_shapley(&m, &[0.0]).unwrap();
        assert_eq!(e.base_value, 1.0);
        assert_eq!(e.values, vec![2.0 - 1.0]);
    }

    #[test]
    fn capacity_guard() {
        let m = GbdtModel {
            feature_names: (0..21).map(|i| i.to_string()).collect(),
            learning_rate: 1.0,
            base_score: 0.0,
            best_iteration: 0,
            trees: vec![],
        };
        assert!(matches!(
            brute_force_shapley(&m, &[0.0; 21]),
            Err(Error::Capacity(_))
        ));
    }
}
