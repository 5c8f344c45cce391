//! Stage orchestration: data, features, LOSO, explanations, selection.

use rayon::prelude::*;

use super::config::RunConfig;
use super::extract::{extract_features, FeatureTable};
use super::ingest::ingest_with_layout;
use super::report::{EffectPoint, EffectSeries, InteractionSummary, RunReport, TargetResults};
use super::synth::generate_synthetic;
use crate::error::{Error, Result};
use crate::eval::{run_loso_observed, selection_sweep, Dataset, LeakageObserver, LosoRun};
use crate::gbdt::{random_search, train, GbdtModel, SearchResult};
use crate::signal::Trial;
use crate::treeshap::{global_importance, TreeExplainer};

/// Which optional analyses to run after LOSO.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stages {
    pub selection: bool,
    pub interactions: bool,
}

impl Stages {
    pub const ALL: Stages = Stages {
        selection: true,
        interactions: true,
    };
    pub const LOSO_ONLY: Stages = Stages {
        selection: false,
        interactions: false,
    };
}

/// Trials from the configured input directory or synthetic spec.
pub fn load_trials(cfg: &RunConfig) -> Result<Vec<Trial>> {
    match (&cfg.input, &cfg.synthetic) {
        (Some(dir), None) => ingest_with_layout(dir, &cfg.layout),
        (None, Some(spec)) => generate_synthetic(spec),
        _ => Err(Error::Config(
            "exactly one of input or synthetic must be set".into(),
        )),
    }
}

/// Full pipeline from raw trials to a report.
pub fn run_pipeline(cfg: &RunConfig, stages: Stages, observer: &dyn LeakageObserver) -> Result<RunReport> {
    cfg.validate()?;
    let trials = load_trials(cfg)?;
    let table = extract_features(&trials, &cfg.extract_config())?;
    analyze_table(&table, cfg, stages, observer)
}

/// LOSO and the requested analyses for every configured target.
pub fn analyze_table(
    table: &FeatureTable,
    cfg: &RunConfig,
    stages: Stages,
    observer: &dyn LeakageObserver,
) -> Result<RunReport> {
    cfg.validate()?;
    let targets = cfg
        .targets
        .iter()
        .map(|&t| analyze_target(&table.to_dataset(t)?, cfg, stages, observer))
        .collect::<Result<_>>()?;
    Ok(RunReport {
        config: cfg.clone(),
        feature_names: table.feature_names.clone(),
        targets,
    })
}

fn analyze_target(
    dataset: &Dataset,
    cfg: &RunConfig,
    stages: Stages,
    observer: &dyn LeakageObserver,
) -> Result<TargetResults> {
    let run = run_loso_observed(dataset, &cfg.loso_options(), observer)?;
    let pooled: Vec<_> = run.explanations.iter().map(|(_, e)| e.clone()).collect();
    let importance = global_importance(&pooled)?;

    let selection = if stages.selection {
        Some(selection_sweep(dataset, &run, cfg.selection_mode, observer)?)
    } else {
        None
    };

    let (interactions, effects) = if stages.interactions {
        let mean = mean_abs_interactions(dataset, &run)?;
        let top: Vec<usize> = importance.indices().into_iter().take(cfg.top_interactions).collect();
        let summary = InteractionSummary {
            features: top.iter().map(|&i| dataset.feature_names[i].clone()).collect(),
            values: top.iter().map(|&i| top.iter().map(|&j| mean[i][j]).collect()).collect(),
        };
        let effects = importance
            .indices()
            .into_iter()
            .take(cfg.effect_features)
            .map(|i| effect_series(dataset, &run, &mean, i))
            .collect();
        (Some(summary), effects)
    } else {
        (None, Vec::new())
    };

    Ok(TargetResults {
        target: dataset.target,
        cv: run.report,
        importance,
        predictions: run.predictions,
        selection,
        interactions,
        effects,
    })
}

/// Mean `|phi_ij|` over all test rows, each explained by its fold's model.
fn mean_abs_interactions(dataset: &Dataset, run: &LosoRun) -> Result<Vec<Vec<f64>>> {
    let f = dataset.feature_names.len();
    let jobs: Vec<(&GbdtModel, usize)> = run
        .folds
        .iter()
        .zip(&run.models)
        .filter_map(|(fold, m)| m.as_ref().map(|m| (m, fold)))
        .flat_map(|(m, fold)| fold.test.iter().map(move |&r| (m, r)))
        .collect();
    if jobs.is_empty() {
        return Err(Error::invalid("no explained rows for interactions"));
    }
    // Per-row matrices are summed in row order so the result does not
    // depend on scheduling.
    let mut total = vec![vec![0.0; f]; f];
    let per_row: Vec<Vec<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(model, row)| {
            Ok(TreeExplainer::new(model)?
                .shap_interactions(&dataset.rows[row].features)?
                .values)
        })
        .collect::<Result<_>>()?;
    for m in &per_row {
        for (a, r) in total.iter_mut().zip(m) {
            for (x, v) in a.iter_mut().zip(r) {
                *x += v.abs();
            }
        }
    }
    let n = per_row.len() as f64;
    Ok(total
        .into_iter()
        .map(|r| r.into_iter().map(|v| v / n).collect())
        .collect())
}

fn effect_series(dataset: &Dataset, run: &LosoRun, mean: &[Vec<f64>], feature: usize) -> EffectSeries {
    let partner = (0..mean.len())
        .filter(|&j| j != feature)
        .fold(None, |best: Option<usize>, j| match best {
            Some(b) if mean[feature][b] >= mean[feature][j] => Some(b),
            _ => Some(j),
        })
        .unwrap_or(feature);
    let points = run
        .explanations
        .iter()
        .map(|(row, ex)| {
            let r = &dataset.rows[*row];
            EffectPoint {
                subject_id: r.subject_id,
                trial_id: r.trial_id,
                feature_value: r.features[feature],
                shap_value: ex.values[feature],
                interactor_value: r.features[partner],
            }
        })
        .collect();
    EffectSeries {
        feature: dataset.feature_names[feature].clone(),
        interactor: dataset.feature_names[partner].clone(),
        points,
    }
}

/// Searches hyperparameters on the whole dataset and trains one model with
/// the winning configuration.
pub fn train_final(dataset: &Dataset, cfg: &RunConfig) -> Result<(GbdtModel, SearchResult)> {
    let x = dataset.matrix();
    let y = dataset.labels()?;
    let search = random_search(&x, &y, &dataset.groups(), &cfg.search, cfg.search_iterations, cfg.seed)?;
    let model = train(&x, &y, None, &search.best)?.with_feature_names(dataset.feature_names.clone())?;
    Ok((model, search))
}
