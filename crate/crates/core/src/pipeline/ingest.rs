//! Reading and writing recordings in the per-trial CSV layout.
//!
//! ```text
//! <root>/subject_<id>/trial_<id>.csv          header of 8 channel names, then rows
//! <root>/subject_<id>/trial_<id>.labels.csv   header valence,arousal,liking, one row
//! ```
//!
//! The first `baseline_rows` data rows of each trial are the pre-stimulus
//! baseline; the remaining `signal_rows` are the stimulus signal.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChannelKind, Ratings, TimeSeries, Trial, DEFAULT_SAMPLE_RATE_HZ};

/// Row counts and sampling rate expected in every trial file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetLayout {
    pub baseline_rows: usize,
    pub signal_rows: usize,
    pub sample_rate_hz: f64,
}

impl Default for DatasetLayout {
    /// 3 s of baseline and 60 s of signal at 128 Hz: 8064 rows.
    fn default() -> Self {
        Self {
            baseline_rows: 384,
            signal_rows: 7680,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }
}

impl DatasetLayout {
    pub fn total_rows(&self) -> usize {
        self.baseline_rows + self.signal_rows
    }

    pub fn validate(&self) -> Result<()> {
        if self.baseline_rows == 0 || self.signal_rows == 0 {
            return Err(Error::Config("layout row counts must be positive".into()));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::Config("layout sample_rate_hz must be positive".into()));
        }
        Ok(())
    }
}

fn ingestion(file: &Path, row: Option<usize>, column: Option<&str>, reason: impl Into<String>) -> Error {
    Error::Ingestion {
        file: file.to_path_buf(),
        row,
        column: column.map(str::to_string),
        reason: reason.into(),
    }
}

/// Parses the numeric id in `<prefix><id><suffix>`.
fn parse_id(name: &str, prefix: &str, suffix: &str) -> Option<u32> {
    name.strip_prefix(prefix)?.strip_suffix(suffix)?.parse().ok()
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    out.sort();
    Ok(out)
}

/// Reads every trial under `dir` with the default 8064-row layout.
pub fn ingest_dataset(dir: &Path) -> Result<Vec<Trial>> {
    ingest_with_layout(dir, &DatasetLayout::default())
}

/// Reads every trial under `dir`, sorted by subject then trial id.
pub fn ingest_with_layout(dir: &Path, layout: &DatasetLayout) -> Result<Vec<Trial>> {
    layout.validate()?;
    let mut trials = Vec::new();
    for subject_dir in read_dir_sorted(dir)? {
        let Some(name) = subject_dir.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(subject_id) = parse_id(name, "subject_", "") else {
            continue;
        };
        if !subject_dir.is_dir() {
            continue;
        }
        for file in read_dir_sorted(&subject_dir)? {
            let Some(fname) = file.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if fname.ends_with(".labels.csv") {
                continue;
            }
            let Some(trial_id) = parse_id(fname, "trial_", ".csv") else {
                continue;
            };
            let labels = subject_dir.join(format!("trial_{trial_id}.labels.csv"));
            trials.push(read_trial(&file, &labels, subject_id, trial_id, layout)?);
        }
    }
    if trials.is_empty() {
        return Err(ingestion(dir, None, None, "no subject_<id>/trial_<id>.csv files found"));
    }
    trials.sort_by_key(|t| (t.subject_id, t.trial_id));
    Ok(trials)
}

/// Reads one trial and its labels file.
pub fn read_trial(
    signal_file: &Path,
    labels_file: &Path,
    subject_id: u32,
    trial_id: u32,
    layout: &DatasetLayout,
) -> Result<Trial> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(signal_file)
        .map_err(|e| ingestion(signal_file, None, None, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| ingestion(signal_file, Some(1), None, e.to_string()))?
        .clone();

    let mut columns: Vec<ChannelKind> = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        let ch: ChannelKind = h
            .trim()
            .parse()
            .map_err(|_| ingestion(signal_file, Some(1), Some(h), "unknown channel name"))?;
        if columns.contains(&ch) {
            return Err(ingestion(signal_file, Some(1), Some(h), "duplicate channel"));
        }
        columns.push(ch);
    }
    if let Some(missing) = ChannelKind::ALL.iter().find(|c| !columns.contains(c)) {
        return Err(ingestion(
            signal_file,
            Some(1),
            Some(missing.name()),
            format!("missing channel {missing}"),
        ));
    }

    let expected = layout.total_rows();
    let mut data: Vec<Vec<f64>> = vec![Vec::with_capacity(expected); columns.len()];
    let mut rows = 0usize;
    for record in reader.records() {
        // Line numbers are 1-based and include the header.
        let line = rows + 2;
        let record = record.map_err(|e| ingestion(signal_file, Some(line), None, e.to_string()))?;
        rows += 1;
        if rows > expected {
            continue;
        }
        for (i, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                ingestion(
                    signal_file,
                    Some(line),
                    Some(columns[i].name()),
                    format!("non-numeric cell {cell:?}"),
                )
            })?;
            if !v.is_finite() {
                return Err(ingestion(
                    signal_file,
                    Some(line),
                    Some(columns[i].name()),
                    "non-finite value",
                ));
            }
            data[i].push(v);
        }
    }
    if rows != expected {
        return Err(ingestion(
            signal_file,
            None,
            None,
            format!("{rows} data rows, expected {expected}"),
        ));
    }

    let ratings = read_labels(labels_file)?;
    let fs = layout.sample_rate_hz;
    let mut channels = BTreeMap::new();
    let mut baselines = BTreeMap::new();
    for (ch, mut values) in columns.into_iter().zip(data) {
        let signal = values.split_off(layout.baseline_rows);
        baselines.insert(ch, TimeSeries::new(values, fs)?);
        channels.insert(ch, TimeSeries::new(signal, fs)?);
    }
    Trial::new(subject_id, trial_id, channels, baselines, ratings)
}

fn read_labels(file: &Path) -> Result<Ratings> {
    if !file.exists() {
        return Err(ingestion(file, None, None, "missing labels file"));
    }
    let mut reader = csv::Reader::from_path(file).map_err(|e| ingestion(file, None, None, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| ingestion(file, Some(1), None, e.to_string()))?
        .clone();
    let record = reader
        .records()
        .next()
        .ok_or_else(|| ingestion(file, Some(2), None, "no ratings row"))?
        .map_err(|e| ingestion(file, Some(2), None, e.to_string()))?;
    let get = |name: &str| -> Result<f64> {
        let i = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ingestion(file, Some(1), Some(name), "missing rating column"))?;
        let cell = record.get(i).unwrap_or("");
        cell.trim()
            .parse()
            .map_err(|_| ingestion(file, Some(2), Some(name), format!("non-numeric cell {cell:?}")))
    };
    let (v, a, l) = (get("valence")?, get("arousal")?, get("liking")?);
    Ratings::new(v, a, l).map_err(|e| ingestion(file, Some(2), None, e.to_string()))
}

/// Writes trials in the layout read by [`ingest_with_layout`]. Values use
/// the shortest decimal form that parses back to the same `f64`.
pub fn write_dataset(dir: &Path, trials: &[Trial]) -> Result<()> {
    for t in trials {
        let sdir = dir.join(format!("subject_{}", t.subject_id));
        fs::create_dir_all(&sdir).map_err(|e| Error::io(&sdir, e))?;
        let file = sdir.join(format!("trial_{}.csv", t.trial_id));
        let mut w = csv::Writer::from_path(&file).map_err(|e| ingestion(&file, None, None, e.to_string()))?;
        w.write_record(ChannelKind::ALL.iter().map(|c| c.name()))?;
        let n_base = t.baselines[&ChannelKind::HEog].len();
        let n_sig = t.channels[&ChannelKind::HEog].len();
        for i in 0..n_base + n_sig {
            let row = ChannelKind::ALL.iter().map(|c| {
                let v = if i < n_base {
                    t.baselines[c].values()[i]
                } else {
                    t.channels[c].values()[i - n_base]
                };
                v.to_string()
            });
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io(&file, e))?;

        let labels = sdir.join(format!("trial_{}.labels.csv", t.trial_id));
        let mut w = csv::Writer::from_path(&labels).map_err(|e| ingestion(&labels, None, None, e.to_string()))?;
        w.write_record(["valence", "arousal", "liking"])?;
        let r = t.ratings;
        w.write_record([r.valence, r.arousal, r.liking].map(|v| v.to_string()))?;
        w.flush().map_err(|e| Error::io(&labels, e))?;
    }
    Ok(())
}

/// Summary of an ingested directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub subjects: usize,
    pub trials: usize,
    pub trials_per_subject: BTreeMap<u32, usize>,
}

impl IngestSummary {
    pub fn of(trials: &[Trial]) -> Self {
        let mut per = BTreeMap::new();
        for t in trials {
            *per.entry(t.subject_id).or_insert(0) += 1;
        }
        Self {
            subjects: per.len(),
            trials: trials.len(),
            trials_per_subject: per,
        }
    }
}
