//! Gradient-based one-side sampling.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Selected rows (ascending) and their training weights.
#[derive(Clone, Debug, PartialEq)]
pub struct GossSample {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl GossSample {
    /// Per-row weight vector of length `n`, zero for rows not sampled.
    pub fn dense_weights(&self, n: usize) -> Vec<f64> {
        let mut w = vec![0.0; n];
        for (&i, &wi) in self.indices.iter().zip(&self.weights) {
            w[i] = wi;
        }
        w
    }
}

/// Keeps the `ceil(a * n)` rows with the largest `|gradient|` at weight 1 and
/// draws `ceil(b * n)` of the remaining rows uniformly without replacement,
/// weighting them by `(1 - a) / b` so weighted gradient sums stay unbiased.
pub fn goss_sample(gradients: &[f64], a: f64, b: f64, seed: u64) -> Result<GossSample> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::invalid(format!("GOSS top rate {a} outside (0, 1]")));
    }
    if !(b >= 0.0 && b <= 1.0 - a + 1e-12) {
        return Err(Error::invalid(format!(
            "GOSS other rate {b} outside [0, 1 - {a}]"
        )));
    }
    let n = gradients.len();
    let top_n = ((a * n as f64).ceil() as usize).min(n);

    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal magnitudes keep index order.
    order.sort_by(|&i, &j| gradients[j].abs().total_cmp(&gradients[i].abs()));

    let mut picked: Vec<(usize, f64)> = order[..top_n].iter().map(|&i| (i, 1.0)).collect();
    let rest = &order[top_n..];
    let rand_n = ((b * n as f64).ceil() as usize).min(rest.len());
    if rand_n > 0 {
        let weight = (1.0 - a) / b;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chosen = index::sample(&mut rng, rest.len(), rand_n);
        picked.extend(chosen.into_iter().map(|k| (rest[k], weight)));
    }
    picked.sort_by_key(|p| p.0);
    Ok(GossSample {
        indices: picked.iter().map(|p| p.0).collect(),
        weights: picked.iter().map(|p| p.1).collect(),
    })
}
