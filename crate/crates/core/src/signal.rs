//! Time-series and trial data model plus the per-channel preprocessing chain:
//! moving-average smoothing, baseline correction, z-normalization, quadratic
//! detrending and the phasic/tonic split of skin conductance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling rate of every recording this crate consumes.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 128.0;

/// A uniformly sampled scalar signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    sample_rate_hz: f64,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input, non-finite samples and a
    /// non-positive sampling rate.
    pub fn new(values: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("time series must contain at least one sample"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            values,
            sample_rate_hz,
        })
    }

    /// Builds a series at the default 128 Hz.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, DEFAULT_SAMPLE_RATE_HZ)
    }

    /// Same rate as `self`, new samples. Callers guarantee the invariants.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self {
            values,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub(crate) fn zeros(len: usize, sample_rate_hz: f64) -> Self {
        Self {
            values: vec![0.0; len.max(1)],
            sample_rate_hz,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Population (1/N) standard deviation.
    pub fn population_std(&self) -> f64 {
        population_std(&self.values)
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn population_std(values: &[f64]) -> f64 {
    let mu = mean(values);
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// The eight peripheral channels of a recording, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    #[serde(rename = "hEOG")]
    HEog,
    #[serde(rename = "vEOG")]
    VEog,
    #[serde(rename = "zEMG")]
    ZEmg,
    #[serde(rename = "tEMG")]
    TEmg,
    #[serde(rename = "SCR")]
    Scr,
    #[serde(rename = "PPG")]
    Ppg,
    #[serde(rename = "Resp")]
    Resp,
    #[serde(rename = "Temp")]
    Temp,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 8] = [
        ChannelKind::HEog,
        ChannelKind::VEog,
        ChannelKind::ZEmg,
        ChannelKind::TEmg,
        ChannelKind::Scr,
        ChannelKind::Ppg,
        ChannelKind::Resp,
        ChannelKind::Temp,
    ];

    /// Column / display name.
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::HEog => "hEOG",
            ChannelKind::VEog => "vEOG",
            ChannelKind::ZEmg => "zEMG",
            ChannelKind::TEmg => "tEMG",
            ChannelKind::Scr => "SCR",
            ChannelKind::Ppg => "PPG",
            ChannelKind::Resp => "Resp",
            ChannelKind::Temp => "Temp",
        }
    }

    /// Prefix used in feature names. Skin conductance features are tagged
    /// `GSR` (GSR1 = phasic SSA component, GSR2 = tonic level).
    pub fn feature_tag(self) -> &'static str {
        match self {
            ChannelKind::Scr => "GSR",
            other => other.name(),
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        ChannelKind::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .or_else(|| s.eq_ignore_ascii_case("GSR").then_some(ChannelKind::Scr))
            .ok_or_else(|| Error::invalid(format!("unknown channel name {s:?}")))
    }
}

/// Rating dimension used as a classification target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Valence,
    Arousal,
    Liking,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Valence, Target::Arousal, Target::Liking];

    pub fn name(self) -> &'static str {
        match self {
            Target::Valence => "valence",
            Target::Arousal => "arousal",
            Target::Liking => "liking",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown target {s:?}")))
    }
}

/// Continuous 9-point self-assessment ratings of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratings {
    pub valence: f64,
    pub arousal: f64,
    pub liking: f64,
}

impl Ratings {
    pub fn new(valence: f64, arousal: f64, liking: f64) -> Result<Self> {
        let r = Self {
            valence,
            arousal,
            liking,
        };
        for t in Target::ALL {
            let v = r.get(t);
            if !(1.0..=9.0).contains(&v) {
                return Err(Error::invalid(format!("{t} rating {v} outside [1, 9]")));
            }
        }
        Ok(r)
    }

    pub fn get(&self, target: Target) -> f64 {
        match target {
            Target::Valence => self.valence,
            Target::Arousal => self.arousal,
            Target::Liking => self.liking,
        }
    }
}

/// One subject x stimulus recording with its pre-stimulus baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub subject_id: u32,
    pub trial_id: u32,
    pub channels: BTreeMap<ChannelKind, TimeSeries>,
    pub baselines: BTreeMap<ChannelKind, TimeSeries>,
    pub ratings: Ratings,
}

impl Trial {
    /// Validates that every channel is present exactly once in both maps and
    /// that signal and baseline lengths are uniform across channels.
    pub fn new(
        subject_id: u32,
        trial_id: u32,
        channels: BTreeMap<ChannelKind, TimeSeries>,
        baselines: BTreeMap<ChannelKind, TimeSeries>,
        ratings: Ratings,
    ) -> Result<Self> {
        for (what, map) in [("signal", &channels), ("baseline", &baselines)] {
            for ch in ChannelKind::ALL {
                if !map.contains_key(&ch) {
                    return Err(Error::SchemaMismatch {
                        channel: ch.name().to_string(),
                        reason: format!("missing {what}"),
                    });
                }
            }
            let len = map[&ChannelKind::HEog].len();
            if let Some((ch, ts)) = map.iter().find(|(_, ts)| ts.len() != len) {
                return Err(Error::SchemaMismatch {
                    channel: ch.name().to_string(),
                    reason: format!("{what} length {} differs from {len}", ts.len()),
                });
            }
        }
        Ratings::new(ratings.valence, ratings.arousal, ratings.liking)?;
        Ok(Self {
            subject_id,
            trial_id,
            channels,
            baselines,
            ratings,
        })
    }

    pub fn channel(&self, ch: ChannelKind) -> &TimeSeries {
        &self.channels[&ch]
    }
}

/// Per-channel preprocessing parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    /// Moving-average span in samples.
    pub smooth_span: BTreeMap<ChannelKind, usize>,
    /// Channels that skip quadratic detrending.
    pub detrend_exempt: BTreeSet<ChannelKind>,
    /// Moving-median window of the tonic skin-conductance level, seconds.
    pub tonic_window_s: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        let smooth_span = ChannelKind::ALL
            .into_iter()
            .map(|c| {
                let span = match c {
                    ChannelKind::Scr | ChannelKind::Temp => 64,
                    _ => 5,
                };
                (c, span)
            })
            .collect();
        Self {
            smooth_span,
            detrend_exempt: [ChannelKind::Temp, ChannelKind::Scr].into_iter().collect(),
            tonic_window_s: 4.0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        for ch in ChannelKind::ALL {
            match self.smooth_span.get(&ch) {
                None => return Err(Error::Config(format!("smooth_span missing {ch}"))),
                Some(0) => return Err(Error::Config(format!("smooth_span for {ch} must be >= 1"))),
                Some(_) => {}
            }
        }
        if !(self.tonic_window_s.is_finite() && self.tonic_window_s > 0.0) {
            return Err(Error::Config("tonic_window_s must be positive".into()));
        }
        Ok(())
    }

    pub fn span(&self, ch: ChannelKind) -> usize {
        self.smooth_span.get(&ch).copied().unwrap_or(1)
    }
}

/// Window bounds `[lo, hi]` (inclusive) around `i` for a centered window of
/// `span` samples. Even spans use `[i - span/2, i + span/2 - 1]`. Near the
/// edges the window shrinks symmetrically to radius `min(i, n - 1 - i)`.
fn centered_window(i: usize, n: usize, span: usize) -> (usize, usize) {
    let left = span / 2;
    let right = span - 1 - left;
    if i >= left && i + right < n {
        (i - left, i + right)
    } else {
        let radius = i.min(n - 1 - i);
        (i - radius, i + radius)
    }
}

/// Centered moving average. The window shrinks symmetrically at the edges so
/// the output has the input's length.
pub fn moving_average_smooth(ts: &TimeSeries, span: usize) -> Result<TimeSeries> {
    let n = ts.len();
    if span == 0 {
        return Err(Error::invalid("smoothing span must be >= 1"));
    }
    if span > n {
        return Err(Error::invalid(format!(
            "smoothing span {span} exceeds series length {n}"
        )));
    }
    let x = ts.values();
    let out = (0..n)
        .map(|i| {
            let (lo, hi) = centered_window(i, n, span);
            x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    Ok(ts.with_values(out))
}

/// Subtracts the baseline mean from every sample.
pub fn baseline_correct(ts: &TimeSeries, baseline: &TimeSeries) -> Result<TimeSeries> {
    if baseline.is_empty() {
        return Err(Error::invalid("baseline is empty"));
    }
    let mu = baseline.mean();
    Ok(ts.with_values(ts.values().iter().map(|v| v - mu).collect()))
}

/// Zero mean, unit population standard deviation.
pub fn znormalize(ts: &TimeSeries) -> Result<TimeSeries> {
    let mu = ts.mean();
    let sd = ts.population_std();
    if !(sd > 1e-12 * (1.0 + mu.abs())) {
        return Err(Error::DegenerateSignal(format!(
            "zero-variance signal (std = {sd:e}) cannot be normalized"
        )));
    }
    Ok(ts.with_values(ts.values().iter().map(|v| (v - mu) / sd).collect()))
}

/// Removes the least-squares quadratic fit over the sample index.
pub fn detrend_quadratic(ts: &TimeSeries) -> Result<TimeSeries> {
    let n = ts.len();
    if n < 3 {
        return Err(Error::invalid(format!(
            "quadratic detrend needs at least 3 samples, got {n}"
        )));
    }
    // The index is mapped onto [-1, 1] to keep the normal equations well
    // conditioned; the fitted space {1, u, u^2} equals {1, t, t^2}.
    let half = (n - 1) as f64 / 2.0;
    let basis: Vec<[f64; 3]> = (0..n)
        .map(|t| {
            let u = (t as f64 - half) / half;
            [1.0, u, u * u]
        })
        .collect();
    let mut gram = Matrix3::<f64>::zeros();
    for b in &basis {
        for r in 0..3 {
            for c in 0..3 {
                gram[(r, c)] += b[r] * b[c];
            }
        }
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("singular detrend normal equations".into()))?;

    let mut resid = ts.values().to_vec();
    // A second pass refits the residual, removing what rounding left behind.
    for _ in 0..2 {
        let mut rhs = Vector3::<f64>::zeros();
        for (b, r) in basis.iter().zip(&resid) {
            for k in 0..3 {
                rhs[k] += b[k] * r;
            }
        }
        let coef = chol.solve(&rhs);
        for (b, r) in basis.iter().zip(resid.iter_mut()) {
            *r -= coef[0] * b[0] + coef[1] * b[1] + coef[2] * b[2];
        }
    }
    Ok(ts.with_values(resid))
}

/// Phasic and tonic parts of a skin-conductance signal.
#[derive(Clone, Debug, PartialEq)]
pub struct ScrComponents {
    pub phasic: TimeSeries,
    pub tonic: TimeSeries,
}

/// Splits skin conductance into a tonic level (centered moving median over
/// `tonic_window_s` seconds) and the phasic remainder. For every sample
/// `phasic + tonic` reproduces the input exactly in floating point.
pub fn scr_split(ts: &TimeSeries, tonic_window_s: f64) -> Result<ScrComponents> {
    if !(tonic_window_s.is_finite() && tonic_window_s > 0.0) {
        return Err(Error::invalid("tonic window must be positive"));
    }
    let window = (tonic_window_s * ts.sample_rate_hz()).round() as usize;
    if window < 3 {
        return Err(Error::invalid(format!(
            "tonic window of {window} samples is shorter than 3"
        )));
    }
    if window > ts.len() {
        return Err(Error::invalid(format!(
            "tonic window of {window} samples exceeds signal length {}",
            ts.len()
        )));
    }
    let x = ts.values();
    let median = moving_median(x, window);

    let mut phasic = Vec::with_capacity(x.len());
    let mut tonic = Vec::with_capacity(x.len());
    for (&xi, &mi) in x.iter().zip(&median) {
        let (p, t) = exact_split(xi, mi);
        phasic.push(p);
        tonic.push(t);
    }
    Ok(ScrComponents {
        phasic: ts.with_values(phasic),
        tonic: ts.with_values(tonic),
    })
}

/// Returns `(x - t', t')` with `t'` as close to `t` as needed for the pair to
/// sum back to `x` without rounding error.
fn exact_split(x: f64, t: f64) -> (f64, f64) {
    let mut t = t;
    for _ in 0..4 {
        let p = x - t;
        if p + t == x {
            return (p, t);
        }
        t = x - p;
    }
    // Only reachable when |t| dwarfs |x| by ~2^53; attribute everything to
    // the phasic part.
    (x, 0.0)
}

/// Centered moving median with the same edge convention as the moving
/// average. Window bounds are monotone in `i`, so a sorted buffer can slide.
fn moving_median(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let mut sorted: Vec<f64> = Vec::with_capacity(window + 2);
    let (mut lo, mut hi) = (0usize, 0usize); // current buffer covers x[lo..hi]
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (wlo, whi) = centered_window(i, n, window);
        while hi <= whi {
            let v = x[hi];
            let pos = sorted.partition_point(|s| s.total_cmp(&v).is_lt());
            sorted.insert(pos, v);
            hi += 1;
        }
        while lo < wlo {
            let v = x[lo];
            let pos = sorted.partition_point(|s| s.total_cmp(&v).is_lt());
            sorted.remove(pos);
            lo += 1;
        }
        let m = sorted.len();
        out.push(if m % 2 == 1 {
            sorted[m / 2]
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
        });
    }
    out
}

/// A trial after preprocessing. `channels` holds every channel after the
/// standard chain; skin conductance is additionally split.
#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessedTrial {
    pub subject_id: u32,
    pub trial_id: u32,
    pub channels: BTreeMap<ChannelKind, TimeSeries>,
    pub scr_phasic: TimeSeries,
    pub scr_tonic: TimeSeries,
    pub ratings: Ratings,
}

impl PreprocessedTrial {
    pub fn channel(&self, ch: ChannelKind) -> &TimeSeries {
        &self.channels[&ch]
    }
}

/// Runs one channel through smooth, baseline-correct, normalize and
/// (unless exempt) detrend.
pub fn preprocess_channel(
    ch: ChannelKind,
    ts: &TimeSeries,
    baseline: &TimeSeries,
    cfg: &PreprocessConfig,
) -> Result<TimeSeries> {
    let tag = |step: &'static str| {
        move |e: Error| Error::Channel {
            channel: ch,
            step,
            source: Box::new(e),
        }
    };
    let smoothed = moving_average_smooth(ts, cfg.span(ch)).map_err(tag("smooth"))?;
    let corrected = baseline_correct(&smoothed, baseline).map_err(tag("baseline"))?;
    let normalized = znormalize(&corrected).map_err(tag("normalize"))?;
    if cfg.detrend_exempt.contains(&ch) {
        Ok(normalized)
    } else {
        detrend_quadratic(&normalized).map_err(tag("detrend"))
    }
}

/// Full preprocessing of a raw trial.
pub fn preprocess_trial(trial: &Trial, cfg: &PreprocessConfig) -> Result<PreprocessedTrial> {
    let mut channels = BTreeMap::new();
    for ch in ChannelKind::ALL {
        let ts = trial.channels.get(&ch).ok_or_else(|| Error::SchemaMismatch {
            channel: ch.name().into(),
            reason: "missing signal".into(),
        })?;
        let baseline = trial.baselines.get(&ch).ok_or_else(|| Error::SchemaMismatch {
            channel: ch.name().into(),
            reason: "missing baseline".into(),
        })?;
        channels.insert(ch, preprocess_channel(ch, ts, baseline, cfg)?);
    }
    let split = scr_split(&channels[&ChannelKind::Scr], cfg.tonic_window_s).map_err(|e| {
        Error::Channel {
            channel: ChannelKind::Scr,
            step: "phasic/tonic split",
            source: Box::new(e),
        }
    })?;
    Ok(PreprocessedTrial {
        subject_id: trial.subject_id,
        trial_id: trial.trial_id,
        channels,
        scr_phasic: split.phasic,
        scr_tonic: split.tonic,
        ratings: trial.ratings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::from_values(v.to_vec()).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            assert!((x - y).abs() <= tol, "index {i}: {x} vs {y}");
        }
    }

    #[test]
    fn time_series_rejects_bad_input() {
        assert!(TimeSeries::from_values(vec![]).is_err());
        assert!(TimeSeries::from_values(vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn smoothing_constant_and_identity() {
        let c = ts(&[2.5; 50]);
        for span in [1, 2, 5, 64.min(50)] {
            let s = moving_average_smooth(&c, span).unwrap();
            assert_close(s.values(), c.values(), 1e-12);
        }
        let x = ts(&[3.0, -1.0, 4.0, 1.5, 9.0]);
        assert_eq!(moving_average_smooth(&x, 1).unwrap(), x);
    }

    #[test]
    fn smoothing_impulse() {
        let s = moving_average_smooth(&ts(&[0.0, 0.0, 1.0, 0.0, 0.0]), 3).unwrap();
        assert_close(s.values(), &[0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0], 1e-15);
    }

    #[test]
    fn even_span_window_convention() {
        // interior window of span 4 at i=3 is [1, 4]
        let x: Vec<f64> = (0..8).map(|i| (i * i) as f64).collect();
        let s = moving_average_smooth(&ts(&x), 4).unwrap();
        assert_eq!(s.values()[3], (1.0 + 4.0 + 9.0 + 16.0) / 4.0);
        // i = 1 shrinks to radius 1
        assert_eq!(s.values()[1], (0.0 + 1.0 + 4.0) / 3.0);
        assert_eq!(s.values()[7], 49.0);
    }

    #[test]
    fn smoothing_span_too_long() {
        assert!(matches!(
            moving_average_smooth(&ts(&[1.0, 2.0]), 3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn baseline_correction() {
        let x = ts(&[1.0, 2.0, 3.0]);
        assert_eq!(baseline_correct(&x, &ts(&[-1.0, 1.0])).unwrap(), x);
        let c = baseline_correct(&ts(&[4.0; 6]), &ts(&[4.0; 3])).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn znormalize_examples() {
        assert_eq!(znormalize(&ts(&[1.0, 3.0])).unwrap().values(), &[-1.0, 1.0]);
        assert!(matches!(
            znormalize(&ts(&[7.0; 10])),
            Err(Error::DegenerateSignal(_))
        ));
        let x = ts(&[0.3, 1.7, -2.2, 5.0, 0.0, 1.1]);
        let once = znormalize(&x).unwrap();
        let twice = znormalize(&once).unwrap();
        assert_close(once.values(), twice.values(), 1e-10);
        assert!(once.mean().abs() < 1e-10);
        assert!((once.population_std() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn detrend_removes_polynomials() {
        let n = 7680;
        let quad: Vec<f64> = (0..n)
            .map(|t| {
                let t = t as f64;
                3.0 - 0.02 * t + 4e-6 * t * t
            })
            .collect();
        let r = detrend_quadratic(&ts(&quad)).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-8));

        let lin: Vec<f64> = (0..100).map(|t| -2.0 + 0.5 * t as f64).collect();
        let r = detrend_quadratic(&ts(&lin)).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-8));

        assert!(detrend_quadratic(&ts(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn detrend_recovers_sine_under_trend() {
        // The quadratic trend is removed exactly, so detrending the trended
        // sine must match detrending the bare sine. The sine itself keeps
        // only its small projection onto the quadratic basis.
        let n = 7680;
        let sine: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 40.0 * t as f64 / n as f64).sin())
            .collect();
        let x: Vec<f64> = sine
            .iter()
            .enumerate()
            .map(|(t, s)| {
                let t = t as f64 / n as f64;
                s + 5.0 + 3.0 * t - 7.0 * t * t
            })
            .collect();
        let r = detrend_quadratic(&ts(&x)).unwrap();
        let bare = detrend_quadratic(&ts(&sine)).unwrap();
        let max_diff = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        assert!(max_diff(r.values(), bare.values()) < 1e-9);
        assert!(max_diff(r.values(), &sine) < 0.05);
    }

    #[test]
    fn detrend_residual_is_orthogonal() {
        let x: Vec<f64> = (0..500).map(|t| ((t * 37 % 101) as f64).sqrt()).collect();
        let r = detrend_quadratic(&ts(&x)).unwrap();
        for p in 0..3 {
            let dot: f64 = r
                .values()
                .iter()
                .enumerate()
                .map(|(t, v)| v * (t as f64 / 500.0).powi(p))
                .sum();
            assert!(dot.abs() < 1e-9, "power {p}: {dot}");
        }
    }

    #[test]
    fn scr_split_constant_and_ramp() {
        let c = TimeSeries::new(vec![0.7; 1000], 128.0).unwrap();
        let s = scr_split(&c, 1.0).unwrap();
        assert_eq!(s.tonic.values(), c.values());
        assert!(s.phasic.values().iter().all(|&v| v == 0.0));

        // slow ramp with sparse spikes
        let n = 7680;
        let ramp: Vec<f64> = (0..n).map(|t| t as f64 / n as f64 * 4.0).collect();
        let mut x = ramp.clone();
        for k in (0..n).step_by(700) {
            for j in 0..40 {
                if k + j < n {
                    x[k + j] += 2.0 * (-(j as f64) / 10.0).exp();
                }
            }
        }
        let s = scr_split(&TimeSeries::from_values(x).unwrap(), 4.0).unwrap();
        let corr = pearson(s.tonic.values(), &ramp);
        assert!(corr > 0.99, "corr {corr}");
    }

    #[test]
    fn scr_split_window_errors() {
        let x = TimeSeries::new(vec![1.0; 100], 128.0).unwrap();
        assert!(scr_split(&x, 1.0).is_err());
        assert!(scr_split(&x, 0.01).is_err());
    }

    #[test]
    fn moving_median_matches_naive() {
        let x: Vec<f64> = (0..97).map(|i| ((i * 7919) % 31) as f64 - 15.0).collect();
        for w in [3, 4, 10, 33, 97] {
            let fast = moving_median(&x, w);
            for i in 0..x.len() {
                let (lo, hi) = centered_window(i, x.len(), w);
                let mut win = x[lo..=hi].to_vec();
                win.sort_by(f64::total_cmp);
                let m = win.len();
                let med = if m % 2 == 1 {
                    win[m / 2]
                } else {
                    0.5 * (win[m / 2 - 1] + win[m / 2])
                };
                assert_eq!(fast[i], med, "w={w} i={i}");
            }
        }
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let (ma, mb) = (mean(a), mean(b));
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    proptest! {
        #[test]
        fn scr_split_is_exactly_additive(
            v in prop::collection::vec(-1e6f64..1e6, 20..300),
            scale in prop::sample::select(vec![1e-9, 1.0, 1e3]),
        ) {
            let x: Vec<f64> = v.iter().map(|a| a * scale).collect();
            let s = scr_split(&TimeSeries::new(x.clone(), 10.0).unwrap(), 0.5).unwrap();
            for i in 0..x.len() {
                prop_assert_eq!(s.phasic.values()[i] + s.tonic.values()[i], x[i]);
            }
        }

        #[test]
        fn znormalize_is_idempotent(v in prop::collection::vec(-100.0f64..100.0, 3..200)) {
            prop_assume!(population_std(&v) > 1e-3);
            let once = znormalize(&ts(&v)).unwrap();
            let twice = znormalize(&once).unwrap();
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn smoothing_preserves_length(v in prop::collection::vec(-10.0f64..10.0, 1..100), span in 1usize..100) {
            let x = ts(&v);
            match moving_average_smooth(&x, span) {
                Ok(s) => prop_assert_eq!(s.len(), v.len()),
                Err(_) => prop_assert!(span > v.len()),
            }
        }
    }
}
