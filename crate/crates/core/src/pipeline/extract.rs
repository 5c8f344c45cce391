//! Trials to feature table: preprocessing, SSA and entropy features.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Dataset, DatasetRow};
use crate::features::{extract_feature_vector, ssa_components, EntropyConfig, FeatureSchema};
use crate::signal::{preprocess_trial, ChannelKind, PreprocessConfig, Ratings, Target, Trial};
use crate::ssa::{self, ComponentCount, SsaConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractConfig {
    pub preprocess: PreprocessConfig,
    pub ssa: SsaConfig,
    pub entropy: EntropyConfig,
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.ssa.validate()?;
        self.entropy.validate()
    }
}

/// Replaces every `Auto` component count with the median hard-threshold rank
/// over `trials` (at least 1, at most the window length). Fixed counts are
/// kept as they are.
pub fn calibrate_components(trials: &[Trial], cfg: &ExtractConfig) -> Result<SsaConfig> {
    let mut out = cfg.ssa.clone();
    let auto: Vec<ChannelKind> = ChannelKind::ALL
        .into_iter()
        .filter(|c| cfg.ssa.count(*c) == ComponentCount::Auto)
        .collect();
    if auto.is_empty() {
        return Ok(out);
    }
    if trials.is_empty() {
        return Err(Error::invalid("cannot calibrate component counts without trials"));
    }
    let ranks: Vec<Vec<usize>> = trials
        .par_iter()
        .map(|t| {
            let pre = preprocess_trial(t, &cfg.preprocess)?;
            auto.iter()
                .map(|&ch| {
                    let src = if ch == ChannelKind::Scr { &pre.scr_phasic } else { pre.channel(ch) };
                    let d = ssa::decompose(src, cfg.ssa.window_len)?;
                    Ok(d.kept_count(ComponentCount::Auto))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    for (i, ch) in auto.iter().enumerate() {
        let mut r: Vec<usize> = ranks.iter().map(|v| v[i]).collect();
        r.sort_unstable();
        let median = r[(r.len() - 1) / 2];
        out.kept_components
            .insert(*ch, ComponentCount::Fixed(median.clamp(1, cfg.ssa.window_len)));
    }
    Ok(out)
}

/// One row per trial with the features of every SSA component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<DatasetRow>,
}

/// Extracts features for all trials in parallel. `Auto` component counts are
/// calibrated on the same trials first.
pub fn extract_features(trials: &[Trial], cfg: &ExtractConfig) -> Result<FeatureTable> {
    cfg.validate()?;
    let ssa_cfg = calibrate_components(trials, cfg)?;
    let schema = FeatureSchema::from_ssa(&ssa_cfg)?;
    let rows = trials
        .par_iter()
        .map(|t| {
            let pre = preprocess_trial(t, &cfg.preprocess)?;
            let comps = ssa_components(&pre, &ssa_cfg)?;
            let fv = extract_feature_vector(&comps, &schema, &cfg.entropy)?;
            Ok(DatasetRow {
                subject_id: t.subject_id,
                trial_id: t.trial_id,
                features: fv.values,
                ratings: t.ratings,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureTable {
        feature_names: schema.feature_names(),
        rows,
    })
}

const LEADING_COLUMNS: [&str; 5] = ["subject", "trial", "valence", "arousal", "liking"];

impl FeatureTable {
    pub fn to_dataset(&self, target: Target) -> Result<Dataset> {
        Dataset::new(self.feature_names.clone(), self.rows.clone(), target)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.feature_names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r.features[i]).collect())
    }

    /// Writes `subject,trial,valence,arousal,liking,<features...>`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(LEADING_COLUMNS.iter().copied().chain(self.feature_names.iter().map(String::as_str)))?;
        for r in &self.rows {
            let mut rec = vec![r.subject_id.to_string(), r.trial_id.to_string()];
            rec.extend([r.ratings.valence, r.ratings.arousal, r.ratings.liking].map(|v| v.to_string()));
            rec.extend(r.features.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let fail = |row: Option<usize>, col: Option<&str>, reason: String| Error::Ingestion {
            file: path.to_path_buf(),
            row,
            column: col.map(str::to_string),
            reason,
        };
        let mut rdr = csv::Reader::from_path(path).map_err(|e| fail(None, None, e.to_string()))?;
        let headers = rdr.headers()?.clone();
        let head: Vec<&str> = headers.iter().collect();
        if head.len() <= LEADING_COLUMNS.len() || head[..LEADING_COLUMNS.len()] != LEADING_COLUMNS {
            return Err(fail(
                Some(1),
                None,
                format!("header must start with {}", LEADING_COLUMNS.join(",")),
            ));
        }
        let feature_names: Vec<String> = head[LEADING_COLUMNS.len()..].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| fail(Some(line), None, e.to_string()))?;
            let num = |j: usize| -> Result<f64> {
                let cell = rec.get(j).unwrap_or("");
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| fail(Some(line), Some(head[j]), format!("invalid number {cell:?}")))
            };
            let id = |j: usize| -> Result<u32> {
                rec.get(j)
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| fail(Some(line), Some(head[j]), "invalid id".into()))
            };
            let ratings = Ratings::new(num(2)?, num(3)?, num(4)?)
                .map_err(|e| fail(Some(line), None, e.to_string()))?;
            let features = (LEADING_COLUMNS.len()..head.len()).map(num).collect::<Result<_>>()?;
            rows.push(DatasetRow {
                subject_id: id(0)?,
                trial_id: id(1)?,
                features,
                ratings,
            });
        }
        Ok(Self { feature_names, rows })
    }

    /// Per-subject counts, handy for quick summaries.
    pub fn trials_per_subject(&self) -> BTreeMap<u32, usize> {
        let mut m = BTreeMap::new();
        for r in &self.rows {
            *m.entry(r.subject_id).or_insert(0) += 1;
        }
        m
    }
}
