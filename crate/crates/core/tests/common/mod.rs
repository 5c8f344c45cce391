//! Reference implementations used as test oracles. They follow the textbook
//! definitions directly and share no code with the library.

#![allow(dead_code)]

use physio_explain::gbdt::{train, FeatureMatrix, GbdtModel, TrainConfig, TreeNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Compensated summation, so the oracle's own rounding error is negligible.
fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn pop_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Sample entropy by comparing every ordered pair of templates: the first
/// `N - m` templates, Chebyshev distance, match when distance `< r`.
pub fn naive_sample_entropy(x: &[f64], m: usize, r_factor: f64) -> f64 {
    let r = r_factor * pop_std(x);
    let count = x.len() - m;
    let dist = |i: usize, j: usize, len: usize| (0..len).map(|k| (x[i + k] - x[j + k]).abs()).fold(0.0, f64::max);
    let (mut a, mut b) = (0u64, 0u64);
    for i in 0..count {
        for j in 0..count {
            if i == j {
                continue;
            }
            if dist(i, j, m) < r {
                b += 1;
            }
            if dist(i, j, m + 1) < r {
                a += 1;
            }
        }
    }
    -(a as f64 / b as f64).ln()
}

/// Fuzzy entropy over every ordered pair of mean-removed templates with
/// membership `exp(-d^n / r)`.
pub fn naive_fuzzy_entropy(x: &[f64], m: usize, r_factor: f64, n: i32) -> f64 {
    let r = r_factor * pop_std(x);
    let count = x.len() - m;
    let template = |i: usize, len: usize| -> Vec<f64> {
        let mean = x[i..i + len].iter().sum::<f64>() / len as f64;
        x[i..i + len].iter().map(|v| v - mean).collect()
    };
    let phi = |len: usize| -> f64 {
        let t: Vec<Vec<f64>> = (0..count).map(|i| template(i, len)).collect();
        let total = neumaier((0..count).flat_map(|i| {
            let t = &t;
            (0..count).filter(move |&j| j != i).map(move |j| {
                let d = t[i].iter().zip(&t[j]).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                (-d.powi(n) / r).exp()
            })
        }));
        total / (count * (count - 1)) as f64
    };
    phi(m).ln() - phi(m + 1).ln()
}

/// `E[f(X) | X_S = x_S]` of one tree where missing features follow the
/// training cover of each branch.
fn conditional(node: &TreeNode, x: &[f64], mask: u64) -> f64 {
    match node {
        TreeNode::Leaf { value, .. } => *value,
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            if mask >> feature & 1 == 1 {
                if x[*feature] <= *threshold {
                    conditional(left, x, mask)
                } else {
                    conditional(right, x, mask)
                }
            } else {
                let (cl, cr) = (left.cover(), right.cover());
                (cl * conditional(left, x, mask) + cr * conditional(right, x, mask)) / (cl + cr)
            }
        }
    }
}

/// Coalition value of every subset (bit `i` set = feature `i` known).
pub fn coalition_values(model: &GbdtModel, x: &[f64]) -> Vec<f64> {
    let m = x.len();
    assert!(m <= 16, "oracle limited to 16 features");
    let trees = &model.trees[..model.best_iteration.min(model.trees.len())];
    (0..1u64 << m)
        .map(|mask| {
            model.base_score
                + model.learning_rate * trees.iter().map(|t| conditional(t, x, mask)).sum::<f64>()
        })
        .collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Shapley values by summing over all coalitions:
/// `phi_i = sum_S |S|! (M - |S| - 1)! / M! * (v(S + i) - v(S))`.
pub fn brute_shapley(model: &GbdtModel, x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let v = coalition_values(model, x);
    (0..m)
        .map(|i| {
            neumaier((0..1u64 << m).filter(|s| s >> i & 1 == 0).map(|s| {
                let k = s.count_ones() as usize;
                let w = factorial(k) * factorial(m - k - 1) / factorial(m);
                w * (v[(s | 1 << i) as usize] - v[s as usize])
            }))
        })
        .collect()
}

/// Shapley interaction index, off-diagonal entries halved so each pair
/// effect is split evenly; the diagonal is the remaining main effect.
pub fn brute_interactions(model: &GbdtModel, x: &[f64]) -> Vec<Vec<f64>> {
    let m = x.len();
    let v = coalition_values(model, x);
    let phi = brute_shapley(model, x);
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            out[i][j] = neumaier(
                (0..1u64 << m)
                    .filter(|s| s >> i & 1 == 0 && s >> j & 1 == 0)
                    .map(|s| {
                        let k = s.count_ones() as usize;
                        let w = factorial(k) * factorial(m - k - 2) / (2.0 * factorial(m - 1));
                        let (s, bi, bj) = (s as usize, 1usize << i, 1usize << j);
                        w * (v[s | bi | bj] - v[s | bi] - v[s | bj] + v[s])
                    }),
            );
        }
        out[i][i] = phi[i] - (0..m).filter(|&j| j != i).map(|j| out[i][j]).sum::<f64>();
    }
    out
}

/// Two-sided exact Wilcoxon p-value: the share of the `2^n` sign
/// assignments of the midranks whose positive-rank sum is at least as far
/// from its mean as the observed one.
pub fn exact_wilcoxon_p(d: &[f64]) -> f64 {
    let d: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = d.len();
    let mut ranks = vec![0.0; n];
    for i in 0..n {
        let below = d.iter().filter(|v| v.abs() < d[i].abs()).count() as f64;
        let equal = d.iter().filter(|v| v.abs() == d[i].abs()).count() as f64;
        ranks[i] = below + (equal + 1.0) / 2.0;
    }
    let mean = ranks.iter().sum::<f64>() / 2.0;
    let observed: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let extreme = (0..1u32 << n)
        .filter(|mask| {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            (w - mean).abs() >= (observed - mean).abs() - 1e-9
        })
        .count();
    extreme as f64 / (1u64 << n) as f64
}

/// Trains a small random model on random data. Depth, tree count and
/// feature count stay within what the brute-force oracle can check.
pub fn random_model(seed: u64, max_features: usize) -> (GbdtModel, FeatureMatrix) {
    let mut r = rng(seed);
    let f = r.random_range(2..=max_features);
    let n = r.random_range(60..=200);
    let data = normals(&mut r, n * f);
    let x = FeatureMatrix::new(n, f, data).unwrap();
    let w: Vec<f64> = normals(&mut r, f);
    let y: Vec<u8> = (0..n)
        .map(|i| {
            let row = x.row(i);
            let s: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + row[0] * row[f - 1];
            let e: f64 = StandardNormal.sample(&mut r);
            u8::from(s + 0.5 * e > 0.0)
        })
        .collect();
    let cfg = TrainConfig {
        learning_rate: r.random_range(0.05..0.5),
        num_leaves: r.random_range(2..=12),
        max_depth: r.random_range(1..=4),
        min_data_in_leaf: r.random_range(2..=10),
        feature_fraction: r.random_range(0.5..=1.0),
        max_rounds: r.random_range(1..=20),
        goss_a: 0.3,
        goss_b: 0.3,
        seed,
        ..Default::default()
    };
    (train(&x, &y, None, &cfg).unwrap(), x)
}
