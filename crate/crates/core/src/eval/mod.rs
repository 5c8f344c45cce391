//! Leave-one-subject-out evaluation, metrics and paired comparison.

mod audit;
mod loso;
mod selection;
mod wilcoxon;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::FeatureMatrix;
use crate::signal::{Ratings, Target};

pub use audit::{LeakageObserver, RowAudit, RowTouch, Stage};
pub use loso::{
    run_loso, run_loso_observed, CvReport, FoldResult, FoldStatus, LosoOptions, LosoRun,
    PredictionRecord, SearchMode,
};
pub use selection::{selection_sweep, SelectionMode};
pub use wilcoxon::{
    wilcoxon_signed_rank, wilcoxon_with, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N,
};

/// Rating threshold separating low (0) from high (1).
pub const DEFAULT_THRESHOLD: f64 = 5.0;

/// 1 when `rating > threshold`, else 0.
pub fn binarize_label(rating: f64, threshold: f64) -> Result<u8> {
    if !(1.0..=9.0).contains(&rating) {
        return Err(Error::invalid(format!("rating {rating} outside [1, 9]")));
    }
    Ok(u8::from(rating > threshold))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// F1 of the positive class; 0 when precision and recall are both 0.
    pub f1: f64,
}

pub fn compute_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(Error::invalid(format!(
            "metrics need equal non-zero lengths, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fneg = 0usize;
    let mut correct = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        correct += usize::from(t == p);
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fneg += 1,
            _ => {}
        }
    }
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fneg > 0 { tp as f64 / (tp + fneg) as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        accuracy: correct as f64 / y_true.len() as f64,
        f1,
    })
}

/// One trial's features and ratings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub subject_id: u32,
    pub trial_id: u32,
    pub features: Vec<f64>,
    pub ratings: Ratings,
}

/// Feature table for one classification target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<DatasetRow>,
    pub target: Target,
    pub threshold: f64,
}

impl Dataset {
    /// Requires at least two subjects and one width for every row.
    pub fn new(feature_names: Vec<String>, rows: Vec<DatasetRow>, target: Target) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.features.len() != feature_names.len()) {
            return Err(Error::invalid(format!(
                "subject {} trial {} has {} features, expected {}",
                r.subject_id,
                r.trial_id,
                r.features.len(),
                feature_names.len()
            )));
        }
        let ds = Self {
            feature_names,
            rows,
            target,
            threshold: DEFAULT_THRESHOLD,
        };
        if ds.subjects().len() < 2 {
            return Err(Error::invalid("a dataset needs at least two subjects"));
        }
        Ok(ds)
    }

    pub fn with_target(&self, target: Target) -> Self {
        Self {
            target,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct subject ids in ascending order.
    pub fn subjects(&self) -> Vec<u32> {
        self.rows
            .iter()
            .map(|r| r.subject_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn groups(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.subject_id).collect()
    }

    pub fn labels(&self) -> Result<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| binarize_label(r.ratings.get(self.target), self.threshold))
            .collect()
    }

    pub fn matrix(&self) -> FeatureMatrix {
        let data = self.rows.iter().flat_map(|r| r.features.iter().copied()).collect();
        FeatureMatrix::new(self.rows.len(), self.feature_names.len(), data)
            .expect("row widths validated")
    }
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
/// A single value has standard error 0.
pub(crate) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Row indices of one leave-one-subject-out fold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub test_subject: u32,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per subject, in ascending subject order.
pub fn loso_split(dataset: &Dataset) -> Result<Vec<Fold>> {
    let subjects = dataset.subjects();
    if subjects.len() < 2 {
        return Err(Error::invalid("leave-one-subject-out needs at least two subjects"));
    }
    Ok(subjects
        .into_iter()
        .map(|s| {
            let (test, train) =
                (0..dataset.len()).partition(|&i| dataset.rows[i].subject_id == s);
            Fold {
                test_subject: s,
                train,
                test,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy(subjects: u32, trials: u32) -> Dataset {
        let rows = (0..subjects)
            .flat_map(|s| {
                (0..trials).map(move |t| {
                    let v = 1.0 + ((s * 7 + t * 3) % 9) as f64 * 0.99;
                    DatasetRow {
                        subject_id: s + 1,
                        trial_id: t + 1,
                        features: vec![v, (t % 3) as f64],
                        ratings: Ratings::new(v, 5.0, 9.0 - v + 1.0).unwrap(),
                    }
                })
            })
            .collect();
        Dataset::new(vec!["a".into(), "b".into()], rows, Target::Valence).unwrap()
    }

    #[test]
    fn binarize_boundaries() {
        assert_eq!(binarize_label(9.0, 5.0).unwrap(), 1);
        assert_eq!(binarize_label(1.0, 5.0).unwrap(), 0);
        assert_eq!(binarize_label(5.0, 5.0).unwrap(), 0);
        assert!(binarize_label(0.5, 5.0).is_err());
    }

    #[test]
    fn metric_cases() {
        let m = compute_metrics(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((m.accuracy, m.f1), (1.0, 1.0));

        let truth: Vec<u8> = (0..50).map(|i| u8::from(i < 31)).collect();
        let m = compute_metrics(&truth, &[1; 50]).unwrap();
        assert!((m.accuracy - 0.62).abs() < 1e-12);
        assert!((m.f1 - 2.0 * 0.62 / 1.62).abs() < 1e-12);

        assert_eq!(compute_metrics(&[0, 0], &[0, 0]).unwrap().f1, 0.0);
        assert!(compute_metrics(&[0], &[0, 1]).is_err());
        assert!(compute_metrics(&[], &[]).is_err());
    }

    #[test]
    fn loso_partitions_rows() {
        let ds = toy(4, 5);
        let folds = loso_split(&ds).unwrap();
        assert_eq!(folds.len(), 4);
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.train.len() + f.test.len(), 20);
            assert!(f.train.iter().all(|i| ds.rows[*i].subject_id != f.test_subject));
        }
        let two = loso_split(&toy(2, 3)).unwrap();
        assert_eq!(two[0].train, two[1].test);
    }

    #[test]
    fn single_subject_rejected() {
        let rows = vec![DatasetRow {
            subject_id: 1,
            trial_id: 1,
            features: vec![0.0],
            ratings: Ratings::new(5.0, 5.0, 5.0).unwrap(),
        }];
        assert!(Dataset::new(vec!["a".into()], rows, Target::Liking).is_err());
    }
}
