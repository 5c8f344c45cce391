//! Leave-one-subject-out cross-validation with per-fold random search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::audit::{LeakageObserver, Stage};
use super::{compute_metrics, loso_split, mean_stderr, Dataset, Fold};
use crate::error::{Error, Result};
use crate::gbdt::{random_search, train, FeatureMatrix, GbdtModel, SearchSpace, TrainConfig};
use crate::signal::Target;
use crate::treeshap::{ShapExplanation, TreeExplainer};

/// Where hyperparameters are searched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Inside each fold on its training subjects only.
    #[default]
    PerFold,
    /// Once on the whole dataset, shared by all folds. Test subjects take
    /// part in the search, so this mode leaks.
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LosoOptions {
    pub search_iterations: usize,
    pub space: SearchSpace,
    pub seed: u64,
    pub search_mode: SearchMode,
    /// Compute SHAP values for every test row.
    pub explain: bool,
}

impl Default for LosoOptions {
    fn default() -> Self {
        Self {
            search_iterations: 300,
            space: SearchSpace::default(),
            seed: 0,
            search_mode: SearchMode::PerFold,
            explain: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FoldStatus {
    Ok,
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub subject_id: u32,
    #[serde(flatten)]
    pub status: FoldStatus,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub config: Option<TrainConfig>,
    pub search_loss: Option<f64>,
}

/// Per-fold results and aggregates over the folds that succeeded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub target: Target,
    pub search_mode: SearchMode,
    pub search_iterations: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub failed_folds: usize,
    pub accuracy_mean: f64,
    pub accuracy_stderr: f64,
    pub f1_mean: f64,
    pub f1_stderr: f64,
}

impl CvReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub row: usize,
    pub subject_id: u32,
    pub trial_id: u32,
    pub label: u8,
    pub probability: f64,
    pub predicted: u8,
}

/// Everything a LOSO run produced. `folds` and `models` are aligned; a
/// failed fold has no model.
#[derive(Clone, Debug)]
pub struct LosoRun {
    pub report: CvReport,
    pub folds: Vec<Fold>,
    pub models: Vec<Option<GbdtModel>>,
    /// Sorted by row.
    pub predictions: Vec<PredictionRecord>,
    /// SHAP values of test rows, sorted by row. Empty unless requested.
    pub explanations: Vec<(usize, ShapExplanation)>,
}

impl LosoRun {
    pub fn predictions_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["subject", "trial", "label", "probability", "predicted"])?;
        for p in &self.predictions {
            w.write_record([
                p.subject_id.to_string(),
                p.trial_id.to_string(),
                p.label.to_string(),
                p.probability.to_string(),
                p.predicted.to_string(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::NumericalFailure(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// The configuration each successful fold trained with.
    pub fn fold_configs(&self) -> Vec<Option<&TrainConfig>> {
        self.report.folds.iter().map(|f| f.config.as_ref()).collect()
    }
}

/// Runs LOSO without instrumentation.
pub fn run_loso(dataset: &Dataset, options: &LosoOptions) -> Result<LosoRun> {
    run_loso_observed(dataset, options, &())
}

struct FoldOutcome {
    result: FoldResult,
    model: Option<GbdtModel>,
    predictions: Vec<PredictionRecord>,
    explanations: Vec<(usize, ShapExplanation)>,
}

fn two_per_class(y: &[u8]) -> bool {
    let pos = y.iter().filter(|&&v| v == 1).count();
    pos >= 2 && y.len() - pos >= 2
}

/// Runs LOSO and reports every row set handed to search, training and
/// prediction to `observer`. Folds run in parallel; the result depends only
/// on the dataset and options.
pub fn run_loso_observed(
    dataset: &Dataset,
    options: &LosoOptions,
    observer: &dyn LeakageObserver,
) -> Result<LosoRun> {
    if options.search_iterations == 0 {
        return Err(Error::invalid("search_iterations must be >= 1"));
    }
    options.space.validate()?;
    let folds = loso_split(dataset)?;
    let x = dataset.matrix();
    let y = dataset.labels()?;
    let groups = dataset.groups();

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let global_seed: u64 = rng.random();
    let fold_seeds: Vec<u64> = folds.iter().map(|_| rng.random()).collect();

    let global = match options.search_mode {
        SearchMode::PerFold => None,
        SearchMode::Global => {
            let all: Vec<usize> = (0..dataset.len()).collect();
            for f in &folds {
                observer.touched(f.test_subject, Stage::Search, &all);
            }
            Some(random_search(
                &x,
                &y,
                &groups,
                &options.space,
                options.search_iterations,
                global_seed,
            )?)
        }
    };

    let outcomes: Vec<FoldOutcome> = folds
        .par_iter()
        .zip(&fold_seeds)
        .map(|(fold, &seed)| {
            let fail = |reason: String| FoldOutcome {
                result: FoldResult {
                    subject_id: fold.test_subject,
                    status: FoldStatus::Failed { reason },
                    n_train: fold.train.len(),
                    n_test: fold.test.len(),
                    accuracy: None,
                    f1: None,
                    config: None,
                    search_loss: None,
                },
                model: None,
                predictions: Vec::new(),
                explanations: Vec::new(),
            };
            let tx = x.select_rows(&fold.train);
            let ty: Vec<u8> = fold.train.iter().map(|&i| y[i]).collect();
            if !two_per_class(&ty) {
                return Ok(fail("training labels need at least two samples per class".into()));
            }

            let (config, search_loss) = match &global {
                Some(g) => (g.best.clone(), g.best_loss),
                None => {
                    observer.touched(fold.test_subject, Stage::Search, &fold.train);
                    let tg: Vec<u32> = fold.train.iter().map(|&i| groups[i]).collect();
                    match random_search(
                        &tx,
                        &ty,
                        &tg,
                        &options.space,
                        options.search_iterations,
                        seed,
                    ) {
                        Ok(r) => (r.best, r.best_loss),
                        Err(Error::DegenerateLabels(reason)) => return Ok(fail(reason)),
                        Err(e) => return Err(e),
                    }
                }
            };

            observer.touched(fold.test_subject, Stage::Train, &fold.train);
            let model = train(&tx, &ty, None, &config)?
                .with_feature_names(dataset.feature_names.clone())?;

            observer.touched(fold.test_subject, Stage::Predict, &fold.test);
            let test_x = x.select_rows(&fold.test);
            let probs = model.predict_matrix(&test_x)?;
            let truth: Vec<u8> = fold.test.iter().map(|&i| y[i]).collect();
            let predicted: Vec<u8> = probs.iter().map(|p| p.class()).collect();
            let metrics = compute_metrics(&truth, &predicted)?;

            let predictions = fold
                .test
                .iter()
                .zip(&probs)
                .map(|(&row, p)| PredictionRecord {
                    row,
                    subject_id: dataset.rows[row].subject_id,
                    trial_id: dataset.rows[row].trial_id,
                    label: y[row],
                    probability: p.probability,
                    predicted: p.class(),
                })
                .collect();
            let explanations = if options.explain {
                explain_rows(&model, &test_x, &fold.test)?
            } else {
                Vec::new()
            };

            Ok(FoldOutcome {
                result: FoldResult {
                    subject_id: fold.test_subject,
                    status: FoldStatus::Ok,
                    n_train: fold.train.len(),
                    n_test: fold.test.len(),
                    accuracy: Some(metrics.accuracy),
                    f1: Some(metrics.f1),
                    config: Some(config),
                    search_loss: Some(search_loss),
                },
                model: Some(model),
                predictions,
                explanations,
            })
        })
        .collect::<Result<_>>()?;

    let results: Vec<FoldResult> = outcomes.iter().map(|o| o.result.clone()).collect();
    let acc: Vec<f64> = results.iter().filter_map(|r| r.accuracy).collect();
    let f1: Vec<f64> = results.iter().filter_map(|r| r.f1).collect();
    if acc.is_empty() {
        return Err(Error::DegenerateLabels(
            "every LOSO fold failed; see fold reasons".into(),
        ));
    }
    let (accuracy_mean, accuracy_stderr) = mean_stderr(&acc);
    let (f1_mean, f1_stderr) = mean_stderr(&f1);

    let mut predictions = Vec::new();
    let mut explanations = Vec::new();
    let mut models = Vec::new();
    for o in outcomes {
        predictions.extend(o.predictions);
        explanations.extend(o.explanations);
        models.push(o.model);
    }
    predictions.sort_by_key(|p| p.row);
    explanations.sort_by_key(|e| e.0);

    Ok(LosoRun {
        report: CvReport {
            target: dataset.target,
            search_mode: options.search_mode,
            search_iterations: options.search_iterations,
            seed: options.seed,
            failed_folds: results.len() - acc.len(),
            folds: results,
            accuracy_mean,
            accuracy_stderr,
            f1_mean,
            f1_stderr,
        },
        folds,
        models,
        predictions,
        explanations,
    })
}

fn explain_rows(
    model: &GbdtModel,
    x: &FeatureMatrix,
    rows: &[usize],
) -> Result<Vec<(usize, ShapExplanation)>> {
    let explainer = TreeExplainer::new(model)?;
    let ex = explainer.explain_matrix(x)?;
    Ok(rows.iter().copied().zip(ex).collect())
}
