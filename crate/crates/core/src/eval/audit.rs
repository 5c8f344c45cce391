//! Row-level instrumentation for leakage checks.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Dataset, Fold};

/// Pipeline stage that read dataset rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Hyperparameter search, including its early-stopping split.
    Search,
    /// Fitting the fold model.
    Train,
    /// Ranking features for selection.
    Selection,
    /// Scoring held-out rows.
    Predict,
}

/// Receives every set of dataset rows a fold hands to a stage.
pub trait LeakageObserver: Sync {
    fn touched(&self, fold_subject: u32, stage: Stage, rows: &[usize]);
}

/// No-op observer.
impl LeakageObserver for () {
    fn touched(&self, _: u32, _: Stage, _: &[usize]) {}
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowTouch {
    pub fold_subject: u32,
    pub stage: Stage,
    pub rows: Vec<usize>,
}

/// Observer that records every touch for later inspection.
#[derive(Debug, Default)]
pub struct RowAudit {
    touches: Mutex<Vec<RowTouch>>,
}

impl RowAudit {
    pub fn new() -> Self {
        Self::default()
    }

    /// Recorded touches sorted by fold, stage and rows.
    pub fn touches(&self) -> Vec<RowTouch> {
        let mut t = self.touches.lock().expect("audit lock").clone();
        t.sort_by(|a, b| {
            (a.fold_subject, a.stage, &a.rows).cmp(&(b.fold_subject, b.stage, &b.rows))
        });
        t
    }

    /// Touches outside `Predict` that include a row of the fold's own test
    /// subject.
    pub fn violations(&self, dataset: &Dataset) -> Vec<RowTouch> {
        self.touches()
            .into_iter()
            .filter(|t| t.stage != Stage::Predict)
            .filter(|t| {
                t.rows
                    .iter()
                    .any(|&r| dataset.rows[r].subject_id == t.fold_subject)
            })
            .collect()
    }

    /// Stages recorded for the fold of `fold.test_subject`.
    pub fn stages_for(&self, fold: &Fold) -> Vec<Stage> {
        let mut s: Vec<Stage> = self
            .touches()
            .iter()
            .filter(|t| t.fold_subject == fold.test_subject)
            .map(|t| t.stage)
            .collect();
        s.dedup();
        s
    }
}

impl LeakageObserver for RowAudit {
    fn touched(&self, fold_subject: u32, stage: Stage, rows: &[usize]) {
        self.touches.lock().expect("audit lock").push(RowTouch {
            fold_subject,
            stage,
            rows: rows.to_vec(),
        });
    }
}
