//! Greedy forward feature selection along a SHAP ranking.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ImportanceRanking;
use crate::error::{Error, Result};
use crate::eval::{mean_stderr, Metrics};

/// Performance of the `k` most important features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionPoint {
    pub k: usize,
    pub accuracy_mean: f64,
    pub accuracy_stderr: f64,
    pub f1_mean: f64,
    pub f1_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionCurve {
    /// Ranked feature names; the subset for `k` is the first `k`.
    pub ranking: Vec<String>,
    pub points: Vec<SelectionPoint>,
    /// Smallest `k` with the highest mean accuracy.
    pub best_k_accuracy: usize,
    /// Smallest `k` with the highest mean f1.
    pub best_k_f1: usize,
}

impl SelectionCurve {
    pub fn point(&self, k: usize) -> Option<&SelectionPoint> {
        self.points.get(k.checked_sub(1)?)
    }

    pub fn best_features_f1(&self) -> &[String] {
        &self.ranking[..self.best_k_f1]
    }

    pub fn best_features_accuracy(&self) -> &[String] {
        &self.ranking[..self.best_k_accuracy]
    }
}

fn argmax_smallest(points: &[SelectionPoint], key: impl Fn(&SelectionPoint) -> f64) -> usize {
    let mut best = &points[0];
    for p in &points[1..] {
        if key(p) > key(best) {
            best = p;
        }
    }
    best.k
}

/// Evaluates the nested prefixes `k = 1..=n` of `ranking`. The callback gets
/// the column indices of the subset and returns one [`Metrics`] per fold;
/// subsets are evaluated in parallel.
pub fn select_features<F>(ranking: &ImportanceRanking, evaluate: F) -> Result<SelectionCurve>
where
    F: Fn(&[usize]) -> Result<Vec<Metrics>> + Sync,
{
    let order = ranking.indices();
    if order.is_empty() {
        return Err(Error::invalid("empty importance ranking"));
    }
    let mut seen = order.clone();
    seen.sort_unstable();
    if seen.iter().enumerate().any(|(i, &f)| i != f) {
        return Err(Error::invalid(
            "ranking must list every feature index exactly once",
        ));
    }

    let results: Vec<Result<SelectionPoint>> = (1..=order.len())
        .into_par_iter()
        .map(|k| {
            let metrics = evaluate(&order[..k]).map_err(|e| Error::Selection {
                k,
                source: Box::new(e),
            })?;
            if metrics.is_empty() {
                return Err(Error::Selection {
                    k,
                    source: Box::new(Error::invalid("callback returned no metrics")),
                });
            }
            let acc: Vec<f64> = metrics.iter().map(|m| m.accuracy).collect();
            let f1: Vec<f64> = metrics.iter().map(|m| m.f1).collect();
            let (accuracy_mean, accuracy_stderr) = mean_stderr(&acc);
            let (f1_mean, f1_stderr) = mean_stderr(&f1);
            Ok(SelectionPoint {
                k,
                accuracy_mean,
                accuracy_stderr,
                f1_mean,
                f1_stderr,
            })
        })
        .collect();
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;

    Ok(SelectionCurve {
        ranking: ranking.feature_names(),
        best_k_accuracy: argmax_smallest(&points, |p| p.accuracy_mean),
        best_k_f1: argmax_smallest(&points, |p| p.f1_mean),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeshap::ImportanceEntry;

    fn ranking(n: usize) -> ImportanceRanking {
        ImportanceRanking {
            entries: (0..n)
                .rev()
                .map(|i| ImportanceEntry {
                    feature: format!("f{i}"),
                    index: i,
                    mean_abs_shap: i as f64,
                })
                .collect(),
        }
    }

    #[test]
    fn curve_and_argmax() {
        let r = ranking(4);
        let curve = select_features(&r, |cols| {
            let v = if cols.len() >= 2 { 0.9 } else { 0.5 };
            Ok(vec![
                Metrics {
                    accuracy: v,
                    f1: v - 0.1,
                },
                Metrics {
                    accuracy: v,
                    f1: v + 0.1,
                },
            ])
        })
        .unwrap();
        assert_eq!(curve.points.len(), 4);
        assert_eq!(curve.best_k_accuracy, 2);
        assert_eq!(curve.best_k_f1, 2);
        let p = curve.point(1).unwrap();
        assert!((p.f1_mean - 0.5).abs() < 1e-15);
        assert!((p.f1_stderr - 0.1).abs() < 1e-12);
        assert_eq!(curve.best_features_f1(), &["f3".to_string(), "f2".to_string()]);
    }

    #[test]
    fn errors_carry_k() {
        let err = select_features(&ranking(3), |cols| {
            if cols.len() == 2 {
                Err(Error::invalid("boom"))
            } else {
                Ok(vec![Metrics {
                    accuracy: 1.0,
                    f1: 1.0,
                }])
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Selection { k: 2, .. }));
    }
}
