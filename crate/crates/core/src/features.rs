//! Complexity and energy features of SSA components.
//!
//! Every kept component contributes three features: sample entropy (`SE`),
//! fuzzy entropy (`FE`) and mean-square energy (`En`). With the default
//! component counts a trial yields 17 components and 51 features.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{population_std, ChannelKind, PreprocessedTrial, TimeSeries};
use crate::ssa::{self, ComponentCount, SsaConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceMode {
    /// `r` is used as-is.
    Absolute,
    /// `r` is multiplied by the population std of the series.
    StdScaled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropyConfig {
    pub embedding_dim: usize,
    pub tolerance: f64,
    /// Exponent of the fuzzy membership function.
    pub fuzzy_power: i32,
    pub tolerance_mode: ToleranceMode,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 2,
            tolerance: 0.15,
            fuzzy_power: 2,
            tolerance_mode: ToleranceMode::StdScaled,
        }
    }
}

impl EntropyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim < 1 {
            return Err(Error::invalid("embedding dimension must be >= 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid("entropy tolerance must be positive"));
        }
        if self.fuzzy_power < 1 {
            return Err(Error::invalid("fuzzy power must be >= 1"));
        }
        Ok(())
    }

    /// Effective tolerance for `x`; `None` for a zero-variance series in
    /// std-scaled mode, whose entropies are 0 by convention.
    fn effective_tolerance(&self, x: &[f64]) -> Result<Option<f64>> {
        self.validate()?;
        if x.len() <= self.embedding_dim + 1 {
            return Err(Error::invalid(format!(
                "entropy needs more than {} samples, got {}",
                self.embedding_dim + 1,
                x.len()
            )));
        }
        match self.tolerance_mode {
            ToleranceMode::Absolute => Ok(Some(self.tolerance)),
            ToleranceMode::StdScaled => {
                let sd = population_std(x);
                Ok((sd > 0.0).then_some(self.tolerance * sd))
            }
        }
    }
}

/// Match counts of one sample-entropy evaluation, over ordered pairs `i != j`
/// of the first `N - m` templates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TemplateMatches {
    /// Pairs within tolerance at length `m + 1`.
    pub longer: u64,
    /// Pairs within tolerance at length `m`.
    pub shorter: u64,
}

/// Counts template matches with a sort-and-sweep over the first coordinate:
/// once two templates differ by `r` there, no later template in sorted order
/// can match either.
pub fn count_template_matches(x: &[f64], m: usize, r: f64) -> TemplateMatches {
    let count = x.len() - m;
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));

    let (longer, shorter) = (0..count)
        .into_par_iter()
        .map(|p| {
            let i = order[p];
            let (mut a, mut b) = (0u64, 0u64);
            for &j in &order[p + 1..] {
                if x[j] - x[i] >= r {
                    break;
                }
                if (1..m).all(|k| (x[i + k] - x[j + k]).abs() < r) {
                    b += 1;
                    if (x[i + m] - x[j + m]).abs() < r {
                        a += 1;
                    }
                }
            }
            (a, b)
        })
        .reduce(|| (0, 0), |p, q| (p.0 + q.0, p.1 + q.1));
    TemplateMatches {
        longer: 2 * longer,
        shorter: 2 * shorter,
    }
}

/// Sample entropy `-ln(A / B)` with Chebyshev distance and strict `< r`.
///
/// When no template pair matches at length `m + 1` the value is capped at
/// `ln(B) + ln(N - m)` (with `B` floored at 1) so feature vectors stay finite.
pub fn sample_entropy(ts: &TimeSeries, cfg: &EntropyConfig) -> Result<f64> {
    let x = ts.values();
    let Some(r) = cfg.effective_tolerance(x)? else {
        return Ok(0.0);
    };
    let m = cfg.embedding_dim;
    let c = count_template_matches(x, m, r);
    if c.longer == 0 {
        let b = c.shorter.max(1) as f64;
        return Ok(b.ln() + ((x.len() - m) as f64).ln());
    }
    Ok(-(c.longer as f64 / c.shorter as f64).ln())
}

/// Fuzzy entropy `ln(Phi^m) - ln(Phi^{m+1})` with mean-removed templates and
/// membership `exp(-d^n / r)`.
pub fn fuzzy_entropy(ts: &TimeSeries, cfg: &EntropyConfig) -> Result<f64> {
    let x = ts.values();
    let Some(r) = cfg.effective_tolerance(x)? else {
        return Ok(0.0);
    };
    let m = cfg.embedding_dim;
    let count = x.len() - m;
    let short = centered_templates(x, m, count);
    let long = centered_templates(x, m + 1, count);
    let power = cfg.fuzzy_power;

    // Upper-triangle row sums of both similarity matrices.
    let rows: Vec<(f64, f64)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let ti = &short[i * m..(i + 1) * m];
            let li = &long[i * (m + 1)..(i + 1) * (m + 1)];
            let (mut s_short, mut s_long) = (0.0, 0.0);
            for j in i + 1..count {
                let tj = &short[j * m..(j + 1) * m];
                let lj = &long[j * (m + 1)..(j + 1) * (m + 1)];
                s_short += (-chebyshev(ti, tj).powi(power) / r).exp();
                s_long += (-chebyshev(li, lj).powi(power) / r).exp();
            }
            (s_short, s_long)
        })
        .collect();
    let (sum_short, sum_long) = rows
        .iter()
        .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    let pairs = (count * (count - 1)) as f64;
    let phi_short = 2.0 * sum_short / pairs;
    let phi_long = 2.0 * sum_long / pairs;
    if phi_long <= 0.0 || phi_short <= 0.0 {
        return Err(Error::NumericalFailure(
            "fuzzy similarity underflowed to zero".into(),
        ));
    }
    Ok(phi_short.ln() - phi_long.ln())
}

fn centered_templates(x: &[f64], len: usize, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len * count);
    for i in 0..count {
        let w = &x[i..i + len];
        let base = w.iter().sum::<f64>() / len as f64;
        out.extend(w.iter().map(|v| v - base));
    }
    out
}

fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// Mean squared amplitude.
pub fn energy(ts: &TimeSeries) -> Result<f64> {
    if ts.is_empty() {
        return Err(Error::invalid("energy of an empty series"));
    }
    Ok(ts.values().iter().map(|v| v * v).sum::<f64>() / ts.len() as f64)
}

/// Feature suffixes, in emission order.
pub const FEATURE_KINDS: [&str; 3] = ["SE", "FE", "En"];

/// Number of components each channel contributes, in canonical channel
/// order. Skin conductance counts its phasic SSA components plus the tonic
/// level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub components: Vec<(ChannelKind, usize)>,
}

impl FeatureSchema {
    /// Schema implied by fixed counts in `cfg`.
    pub fn from_ssa(cfg: &SsaConfig) -> Result<Self> {
        let components = ChannelKind::ALL
            .into_iter()
            .map(|ch| match cfg.count(ch) {
                ComponentCount::Fixed(n) => Ok((ch, if ch == ChannelKind::Scr { n + 1 } else { n })),
                ComponentCount::Auto => Err(Error::Config(format!(
                    "{ch}: automatic component count must be resolved before feature extraction"
                ))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { components })
    }

    pub fn component_count(&self) -> usize {
        self.components.iter().map(|c| c.1).sum()
    }

    pub fn feature_count(&self) -> usize {
        self.component_count() * FEATURE_KINDS.len()
    }

    /// Component tags such as `vEOG1` or `GSR2`, in canonical order.
    pub fn component_tags(&self) -> Vec<String> {
        self.components
            .iter()
            .flat_map(|(ch, n)| (1..=*n).map(move |k| format!("{}{k}", ch.feature_tag())))
            .collect()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.component_tags()
            .iter()
            .flat_map(|tag| FEATURE_KINDS.iter().map(move |k| format!("{tag}_{k}")))
            .collect()
    }
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::from_ssa(&SsaConfig::default()).expect("default SSA counts are fixed")
    }
}

/// Named features of one trial in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

/// Computes SE, FE and En for every component listed in `schema`.
pub fn extract_feature_vector(
    components: &BTreeMap<ChannelKind, Vec<TimeSeries>>,
    schema: &FeatureSchema,
    cfg: &EntropyConfig,
) -> Result<FeatureVector> {
    cfg.validate()?;
    let mut flat: Vec<&TimeSeries> = Vec::with_capacity(schema.component_count());
    for (ch, n) in &schema.components {
        let comps = components.get(ch).ok_or_else(|| Error::SchemaMismatch {
            channel: ch.name().into(),
            reason: "channel missing from component map".into(),
        })?;
        if comps.len() != *n {
            return Err(Error::SchemaMismatch {
                channel: ch.name().into(),
                reason: format!("expected {n} components, got {}", comps.len()),
            });
        }
        flat.extend(comps);
    }
    let triples = flat
        .par_iter()
        .map(|ts| {
            Ok([
                sample_entropy(ts, cfg)?,
                fuzzy_entropy(ts, cfg)?,
                energy(ts)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = triples.into_iter().flatten().collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(format!(
            "feature {} is not finite",
            schema.feature_names()[i]
        )));
    }
    Ok(FeatureVector {
        names: schema.feature_names(),
        values,
    })
}

/// Decomposes every channel of a preprocessed trial and keeps the leading
/// components. Skin conductance contributes its phasic SSA components
/// followed by the raw tonic level. All counts must be fixed.
pub fn ssa_components(
    trial: &PreprocessedTrial,
    cfg: &SsaConfig,
) -> Result<BTreeMap<ChannelKind, Vec<TimeSeries>>> {
    ChannelKind::ALL
        .par_iter()
        .map(|&ch| {
            let n = match cfg.count(ch) {
                ComponentCount::Fixed(n) => n,
                ComponentCount::Auto => {
                    return Err(Error::Config(format!(
                        "{ch}: automatic component count must be resolved first"
                    )))
                }
            };
            let source = if ch == ChannelKind::Scr {
                &trial.scr_phasic
            } else {
                trial.channel(ch)
            };
            let decomp = ssa::decompose(source, cfg.window_len).map_err(|e| Error::Channel {
                channel: ch,
                step: "ssa",
                source: Box::new(e),
            })?;
            let mut comps = decomp.leading(n);
            if ch == ChannelKind::Scr {
                comps.push(trial.scr_tonic.clone());
            }
            Ok((ch, comps))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::from_values(v).unwrap()
    }

    #[test]
    fn constant_signal_entropies_are_zero() {
        let c = ts(vec![3.0; 100]);
        let cfg = EntropyConfig::default();
        assert_eq!(sample_entropy(&c, &cfg).unwrap(), 0.0);
        assert_eq!(fuzzy_entropy(&c, &cfg).unwrap(), 0.0);
        let abs = EntropyConfig {
            tolerance_mode: ToleranceMode::Absolute,
            ..cfg
        };
        assert_eq!(sample_entropy(&c, &abs).unwrap(), 0.0);
        assert_eq!(fuzzy_entropy(&c, &abs).unwrap(), 0.0);
    }

    #[test]
    fn entropy_argument_errors() {
        let cfg = EntropyConfig::default();
        assert!(sample_entropy(&ts(vec![1.0, 2.0, 3.0]), &cfg).is_err());
        let zero = EntropyConfig {
            tolerance: 0.0,
            ..cfg.clone()
        };
        let x = ts((0..20).map(f64::from).collect());
        assert!(sample_entropy(&x, &zero).is_err());
        assert!(fuzzy_entropy(&x, &zero).is_err());
    }

    #[test]
    fn sample_entropy_cap_without_long_matches() {
        // Strictly increasing steps larger than r: no pair matches at all.
        let x = ts((0..30).map(|i| (i * i) as f64).collect());
        let cfg = EntropyConfig {
            tolerance: 0.5,
            tolerance_mode: ToleranceMode::Absolute,
            ..Default::default()
        };
        let v = sample_entropy(&x, &cfg).unwrap();
        assert!((v - (28.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn hand_counted_matches() {
        // m = 1, r = 1.5, templates start at 0..4 with first values
        // [0, 1, 5, 6]. Pairs (0,1) and (2,3) match at length 1; their second
        // values (1 vs 5, 6 vs 2) do not.
        let x = [0.0, 1.0, 5.0, 6.0, 2.0];
        let c = count_template_matches(&x, 1, 1.5);
        assert_eq!(c, TemplateMatches { longer: 0, shorter: 4 });
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&ts(vec![0.0; 5])).unwrap(), 0.0);
        assert_eq!(energy(&ts(vec![1.0, 2.0, 3.0])).unwrap(), 14.0 / 3.0);
        let x = ts(vec![0.5, -1.25, 2.0]);
        let y = ts(x.values().iter().map(|v| 3.0 * v).collect());
        assert!((energy(&y).unwrap() - 9.0 * energy(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn default_schema_has_51_features() {
        let s = FeatureSchema::default();
        assert_eq!(s.component_count(), 17);
        let names = s.feature_names();
        assert_eq!(names.len(), 51);
        assert_eq!(&names[..3], &["hEOG1_SE", "hEOG1_FE", "hEOG1_En"]);
        assert!(names.contains(&"GSR2_En".to_string()));
        assert!(names.contains(&"PPG4_SE".to_string()));
        assert_eq!(names.last().unwrap(), "Temp1_En");
    }

    #[test]
    fn auto_counts_have_no_schema() {
        let mut cfg = SsaConfig::default();
        cfg.kept_components.insert(ChannelKind::Ppg, ComponentCount::Auto);
        assert!(FeatureSchema::from_ssa(&cfg).is_err());
    }

    fn synthetic_components(schema: &FeatureSchema) -> BTreeMap<ChannelKind, Vec<TimeSeries>> {
        schema
            .components
            .iter()
            .map(|(ch, n)| {
                let comps = (0..*n)
                    .map(|k| {
                        ts((0..300)
                            .map(|t| ((t * (k + 2) + *ch as usize * 7) as f64 * 0.37).sin())
                            .collect())
                    })
                    .collect();
                (*ch, comps)
            })
            .collect()
    }

    #[test]
    fn feature_vector_is_complete_and_deterministic() {
        let schema = FeatureSchema::default();
        let comps = synthetic_components(&schema);
        let cfg = EntropyConfig::default();
        let a = extract_feature_vector(&comps, &schema, &cfg).unwrap();
        let b = extract_feature_vector(&comps, &schema, &cfg).unwrap();
        assert_eq!(a.len(), 51);
        assert!(a.values.iter().all(|v| v.is_finite()));
        assert_eq!(a, b);
        assert!(a.get("Temp1_En").is_some());
    }

    #[test]
    fn feature_vector_schema_errors() {
        let schema = FeatureSchema::default();
        let mut comps = synthetic_components(&schema);
        comps.remove(&ChannelKind::Temp);
        match extract_feature_vector(&comps, &schema, &EntropyConfig::default()) {
            Err(Error::SchemaMismatch { channel, .. }) => assert_eq!(channel, "Temp"),
            other => panic!("unexpected {other:?}"),
        }
        let mut comps = synthetic_components(&schema);
        comps.get_mut(&ChannelKind::Ppg).unwrap().pop();
        assert!(matches!(
            extract_feature_vector(&comps, &schema, &EntropyConfig::default()),
            Err(Error::SchemaMismatch { .. })
        ));
    }
}
