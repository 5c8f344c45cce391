//! SHAP-guided forward selection evaluated with the folds of a LOSO run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::audit::{LeakageObserver, Stage};
use super::loso::LosoRun;
use super::{compute_metrics, Dataset, Metrics};
use crate::error::{Error, Result};
use crate::gbdt::train;
use crate::treeshap::{
    global_importance, select_features, ImportanceRanking, SelectionCurve, ShapExplanation,
    TreeExplainer,
};

/// Which SHAP values order the features.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Each fold ranks features with its own model on its own training rows,
    /// so the held-out subject never influences which features it gets.
    #[default]
    FoldLocal,
    /// One ranking from the test-row SHAP values pooled over all folds. Every
    /// fold's subset then depends on its own test subject.
    PooledTest,
}

/// Sweeps `k = 1..=n` features. Every successful fold of `run` retrains its
/// chosen configuration on the top-`k` columns and is scored on its test
/// subject. The returned curve's ranking is the pooled ranking of `mode`;
/// with `FoldLocal` it summarizes the per-fold rankings over training rows.
pub fn selection_sweep(
    dataset: &Dataset,
    run: &LosoRun,
    mode: SelectionMode,
    observer: &dyn LeakageObserver,
) -> Result<SelectionCurve> {
    let x = dataset.matrix();
    let y = dataset.labels()?;
    let live: Vec<usize> = (0..run.folds.len())
        .filter(|&i| run.models[i].is_some())
        .collect();
    if live.is_empty() {
        return Err(Error::invalid("the LOSO run has no successful folds"));
    }

    // Per-fold column order, plus the ranking reported with the curve.
    let (fold_orders, summary): (Vec<Option<Vec<usize>>>, ImportanceRanking) = match mode {
        SelectionMode::FoldLocal => {
            let per_fold: Vec<(usize, Vec<ShapExplanation>)> = live
                .par_iter()
                .map(|&i| {
                    let fold = &run.folds[i];
                    observer.touched(fold.test_subject, Stage::Selection, &fold.train);
                    let model = run.models[i].as_ref().expect("live fold");
                    let ex = TreeExplainer::new(model)?.explain_matrix(&x.select_rows(&fold.train))?;
                    Ok((i, ex))
                })
                .collect::<Result<_>>()?;
            let mut orders = vec![None; run.folds.len()];
            let mut pooled = Vec::new();
            for (i, ex) in per_fold {
                orders[i] = Some(global_importance(&ex)?.indices());
                pooled.extend(ex);
            }
            (orders, global_importance(&pooled)?)
        }
        SelectionMode::PooledTest => {
            let pooled: Vec<ShapExplanation> =
                run.explanations.iter().map(|(_, e)| e.clone()).collect();
            if pooled.is_empty() {
                return Err(Error::invalid(
                    "pooled-test selection needs a LOSO run with explanations",
                ));
            }
            let rows: Vec<usize> = run.explanations.iter().map(|(r, _)| *r).collect();
            for &i in &live {
                observer.touched(run.folds[i].test_subject, Stage::Selection, &rows);
            }
            let ranking = global_importance(&pooled)?;
            let order = ranking.indices();
            (vec![Some(order); run.folds.len()], ranking)
        }
    };

    select_features(&summary, |prefix| {
        let k = prefix.len();
        live.iter()
            .map(|&i| {
                let fold = &run.folds[i];
                let config = run.report.folds[i].config.as_ref().expect("live fold");
                let order = fold_orders[i].as_ref().expect("live fold");
                // Canonical column order keeps split tie-breaking identical
                // to the full model when k covers every feature.
                let mut cols = order[..k].to_vec();
                cols.sort_unstable();

                observer.touched(fold.test_subject, Stage::Train, &fold.train);
                let tx = x.select_rows(&fold.train).select_columns(&cols);
                let ty: Vec<u8> = fold.train.iter().map(|&r| y[r]).collect();
                let model = train(&tx, &ty, None, config)?;

                observer.touched(fold.test_subject, Stage::Predict, &fold.test);
                let test_x = x.select_rows(&fold.test).select_columns(&cols);
                let pred: Vec<u8> = model
                    .predict_matrix(&test_x)?
                    .iter()
                    .map(|p| p.class())
                    .collect();
                let truth: Vec<u8> = fold.test.iter().map(|&r| y[r]).collect();
                compute_metrics(&truth, &pred)
            })
            .collect::<Result<Vec<Metrics>>>()
    })
}
