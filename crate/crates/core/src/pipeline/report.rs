//! Result bundle of a pipeline run and its on-disk form.
//!
//! Files written by [`emit_report`]:
//!
//! - `report.json`: the whole [`RunReport`]
//! - `importance.csv`: `target,rank,feature,mean_abs_shap`
//! - `selection_curve.csv`: `target,k,feature_added,accuracy_mean,accuracy_stderr,f1_mean,f1_stderr`
//! - `interactions.csv`: `target,feature_i,feature_j,mean_abs_interaction`
//! - `effects_<feature>.csv`: `target,subject,trial,feature_value,shap_value,interactor,interactor_value`
//! - `predictions.csv`: `target,subject,trial,label,probability,predicted`
//!
//! Numbers use the shortest decimal form that parses back to the same value,
//! so identical results give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{CvReport, PredictionRecord};
use crate::signal::Target;
use crate::treeshap::{ImportanceRanking, SelectionCurve};

/// Mean absolute interaction values among the most important features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSummary {
    pub features: Vec<String>,
    /// `values[i][j]` is the mean of `|phi_ij|` over the explained samples.
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectPoint {
    pub subject_id: u32,
    pub trial_id: u32,
    pub feature_value: f64,
    pub shap_value: f64,
    pub interactor_value: f64,
}

/// SHAP dependence data of one feature, colored by its strongest
/// interaction partner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectSeries {
    pub feature: String,
    pub interactor: String,
    pub points: Vec<EffectPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetResults {
    pub target: Target,
    pub cv: CvReport,
    pub importance: ImportanceRanking,
    pub predictions: Vec<PredictionRecord>,
    pub selection: Option<SelectionCurve>,
    pub interactions: Option<InteractionSummary>,
    pub effects: Vec<EffectSeries>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub feature_names: Vec<String>,
    pub targets: Vec<TargetResults>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn target(&self, t: Target) -> Option<&TargetResults> {
        self.targets.iter().find(|r| r.target == t)
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::NumericalFailure(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Renders every output file in memory, keyed by file name.
pub fn render_report(report: &RunReport) -> Result<BTreeMap<String, String>> {
    let mut files = BTreeMap::new();
    files.insert("report.json".to_string(), report.to_json()?);

    let importance = report.targets.iter().flat_map(|t| {
        t.importance.entries.iter().enumerate().map(move |(rank, e)| {
            vec![
                t.target.to_string(),
                (rank + 1).to_string(),
                e.feature.clone(),
                e.mean_abs_shap.to_string(),
            ]
        })
    });
    files.insert(
        "importance.csv".into(),
        csv_string(&["target", "rank", "feature", "mean_abs_shap"], importance)?,
    );

    let predictions = report.targets.iter().flat_map(|t| {
        t.predictions.iter().map(move |p| {
            vec![
                t.target.to_string(),
                p.subject_id.to_string(),
                p.trial_id.to_string(),
                p.label.to_string(),
                p.probability.to_string(),
                p.predicted.to_string(),
            ]
        })
    });
    files.insert(
        "predictions.csv".into(),
        csv_string(
            &["target", "subject", "trial", "label", "probability", "predicted"],
            predictions,
        )?,
    );

    if report.targets.iter().any(|t| t.selection.is_some()) {
        let rows = report.targets.iter().flat_map(|t| {
            t.selection.iter().flat_map(move |c| {
                c.points.iter().map(move |p| {
                    vec![
                        t.target.to_string(),
                        p.k.to_string(),
                        c.ranking[p.k - 1].clone(),
                        p.accuracy_mean.to_string(),
                        p.accuracy_stderr.to_string(),
                        p.f1_mean.to_string(),
                        p.f1_stderr.to_string(),
                    ]
                })
            })
        });
        files.insert(
            "selection_curve.csv".into(),
            csv_string(
                &[
                    "target",
                    "k",
                    "feature_added",
                    "accuracy_mean",
                    "accuracy_stderr",
                    "f1_mean",
                    "f1_stderr",
                ],
                rows,
            )?,
        );
    }

    if report.targets.iter().any(|t| t.interactions.is_some()) {
        let rows = report.targets.iter().flat_map(|t| {
            t.interactions.iter().flat_map(move |m| {
                m.features.iter().enumerate().flat_map(move |(i, fi)| {
                    m.features.iter().enumerate().map(move |(j, fj)| {
                        vec![
                            t.target.to_string(),
                            fi.clone(),
                            fj.clone(),
                            m.values[i][j].to_string(),
                        ]
                    })
                })
            })
        });
        files.insert(
            "interactions.csv".into(),
            csv_string(
                &["target", "feature_i", "feature_j", "mean_abs_interaction"],
                rows,
            )?,
        );
    }

    // One file per feature; a feature important for several targets gets
    // the rows of each, distinguished by the target column.
    let mut effects: BTreeMap<&str, Vec<Vec<String>>> = BTreeMap::new();
    for t in &report.targets {
        for e in &t.effects {
            let rows = effects.entry(e.feature.as_str()).or_default();
            rows.extend(e.points.iter().map(|p| {
                vec![
                    t.target.to_string(),
                    p.subject_id.to_string(),
                    p.trial_id.to_string(),
                    p.feature_value.to_string(),
                    p.shap_value.to_string(),
                    e.interactor.clone(),
                    p.interactor_value.to_string(),
                ]
            }));
        }
    }
    for (feature, rows) in effects {
        files.insert(
            format!("effects_{feature}.csv"),
            csv_string(
                &[
                    "target",
                    "subject",
                    "trial",
                    "feature_value",
                    "shap_value",
                    "interactor",
                    "interactor_value",
                ],
                rows,
            )?,
        );
    }
    Ok(files)
}

/// Writes the report files into `out`, creating it if needed. Returns the
/// written paths in name order. A report without target results is refused
/// before anything is written.
pub fn emit_report(report: &RunReport, out: &Path) -> Result<Vec<PathBuf>> {
    if report.targets.is_empty() {
        return Err(Error::io(
            out,
            io::Error::new(
                io::ErrorKind::InvalidInput,
                "refusing to write a report without any target results",
            ),
        ));
    }
    let files = render_report(report)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = out.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
