//! Synthetic recordings with planted rating effects.
//!
//! Every channel is a sum of sinusoids plus autoregressive noise. Three
//! latent scores per trial drive the ratings and, scaled by
//! `effect_strength`, a small set of signal properties:
//!
//! - valence: noise-to-signal ratio of vEOG
//! - arousal: dominant frequency of Resp and vEOG
//! - liking: beat-to-beat irregularity of PPG and drift amplitude of Temp
//!
//! All other channels are independent of the ratings.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChannelKind, Ratings, Target, TimeSeries, Trial};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n_subjects: usize,
    pub trials_per_subject: usize,
    /// 0 makes ratings independent of the signals, 1 is the full effect.
    pub effect_strength: f64,
    /// Spread of per-subject offsets in signal properties.
    pub subject_variance: f64,
    pub seed: u64,
    /// Stimulus duration after the baseline.
    pub seconds: f64,
    pub baseline_seconds: f64,
    pub sample_rate_hz: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_subjects: 8,
            trials_per_subject: 20,
            effect_strength: 1.0,
            subject_variance: 0.1,
            seed: 0,
            seconds: 60.0,
            baseline_seconds: 3.0,
            sample_rate_hz: 128.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic spec: {m}")));
        if self.n_subjects < 2 {
            return bad("n_subjects must be >= 2");
        }
        if self.trials_per_subject < 2 {
            return bad("trials_per_subject must be >= 2");
        }
        if !(0.0..=1.0).contains(&self.effect_strength) {
            return bad("effect_strength must lie in [0, 1]");
        }
        if !(self.subject_variance >= 0.0 && self.subject_variance.is_finite()) {
            return bad("subject_variance must be >= 0");
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return bad("sample_rate_hz must be positive");
        }
        if !(self.seconds >= 5.0 && self.seconds.is_finite()) {
            return bad("seconds must be >= 5");
        }
        if !(self.baseline_seconds > 0.0 && self.baseline_seconds.is_finite()) {
            return bad("baseline_seconds must be positive");
        }
        Ok(())
    }

    pub fn signal_len(&self) -> usize {
        (self.seconds * self.sample_rate_hz).round() as usize
    }

    pub fn baseline_len(&self) -> usize {
        ((self.baseline_seconds * self.sample_rate_hz).round() as usize).max(1)
    }
}

/// Channels whose signals carry the planted effect for `target`.
pub fn planted_channels(target: Target) -> &'static [ChannelKind] {
    match target {
        Target::Valence => &[ChannelKind::VEog],
        Target::Arousal => &[ChannelKind::Resp, ChannelKind::VEog],
        Target::Liking => &[ChannelKind::Ppg, ChannelKind::Temp],
    }
}

/// Per-subject multiplicative offsets (log scale).
#[derive(Clone, Copy)]
struct SubjectOffsets {
    veog_freq: f64,
    veog_noise: f64,
    resp_freq: f64,
    ppg_jitter: f64,
    temp_drift: f64,
    heart_rate: f64,
}

/// Latent scores of one trial.
#[derive(Clone, Copy)]
struct Latent {
    valence: f64,
    arousal: f64,
    liking: f64,
}

struct Gen {
    rng: ChaCha8Rng,
    fs: f64,
}

impl Gen {
    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    fn uniform_phase(&mut self) -> f64 {
        use rand::Rng;
        self.rng.random::<f64>() * TAU
    }

    fn ar_noise(&mut self, n: usize, phi: f64, sigma: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        // Start from the stationary distribution.
        let mut prev = self.normal() * sigma / (1.0 - phi * phi).sqrt();
        for _ in 0..n {
            prev = phi * prev + sigma * self.normal();
            out.push(prev);
        }
        out
    }

    fn sines(&mut self, n: usize, parts: &[(f64, f64)]) -> Vec<f64> {
        let phases: Vec<f64> = parts.iter().map(|_| self.uniform_phase()).collect();
        (0..n)
            .map(|i| {
                let t = i as f64 / self.fs;
                parts
                    .iter()
                    .zip(&phases)
                    .map(|((amp, f), ph)| amp * (TAU * f * t + ph).sin())
                    .sum()
            })
            .collect()
    }

    fn channel(&mut self, ch: ChannelKind, n: usize, z: Latent, o: SubjectOffsets, s: f64) -> Vec<f64> {
        let add = |a: Vec<f64>, b: Vec<f64>| a.into_iter().zip(b).map(|(x, y)| x + y).collect();
        match ch {
            ChannelKind::HEog => {
                let base = self.sines(n, &[(0.8, 0.3), (0.4, 1.1)]);
                add(base, self.ar_noise(n, 0.8, 0.15))
            }
            ChannelKind::VEog => {
                let f = 0.6 * (0.35 * s * z.arousal + o.veog_freq).exp();
                let base = self.sines(n, &[(1.0, f), (0.3, 2.0 * f)]);
                let sigma = 0.25 * (0.9 * s * z.valence + o.veog_noise).exp();
                add(base, self.ar_noise(n, 0.5, sigma))
            }
            ChannelKind::ZEmg => add(self.sines(n, &[(0.3, 25.0)]), self.ar_noise(n, 0.3, 0.5)),
            ChannelKind::TEmg => {
                add(self.sines(n, &[(0.3, 31.0), (0.2, 47.0)]), self.ar_noise(n, 0.3, 0.5))
            }
            ChannelKind::Scr => {
                let base = self.sines(n, &[(0.5, 0.03), (0.2, 0.2)]);
                let noise = self.ar_noise(n, 0.95, 0.02);
                base.into_iter().zip(noise).map(|(b, e)| 2.0 + b + e).collect()
            }
            ChannelKind::Ppg => {
                let hr = 1.2 * o.heart_rate.exp();
                let jitter_sd = 0.02 * (1.0 * s * z.liking + o.ppg_jitter).exp();
                let jitter = self.ar_noise(n, 0.99, jitter_sd);
                let mut phase = self.uniform_phase();
                let noise = self.ar_noise(n, 0.5, 0.05 * (0.7 * s * z.liking).exp());
                (0..n)
                    .map(|i| {
                        phase += TAU * hr / self.fs * (1.0 + jitter[i]).max(0.05);
                        phase.sin() + 0.4 * (2.0 * phase).sin() + noise[i]
                    })
                    .collect()
            }
            ChannelKind::Resp => {
                let f = 0.5 * (0.8 * s * z.arousal + o.resp_freq).exp();
                add(self.sines(n, &[(1.0, f)]), self.ar_noise(n, 0.7, 0.05))
            }
            ChannelKind::Temp => {
                let amp = 0.5 * (0.9 * s * z.liking + o.temp_drift).exp();
                let wobble = self.sines(n, &[(0.05, 0.05)]);
                let noise = self.ar_noise(n, 0.95, 0.01);
                (0..n)
                    .map(|i| {
                        let u = i as f64 / n as f64;
                        33.0 + amp * (0.6 * u + 0.4 * u * u) + wobble[i] + noise[i]
                    })
                    .collect()
            }
        }
    }
}

fn rating(z: f64, noise: f64) -> f64 {
    (5.6 + 1.8 * z + 0.15 * noise).clamp(1.0, 9.0)
}

/// Generates `n_subjects x trials_per_subject` trials, sorted by subject and
/// trial id (both starting at 1). Identical specs give identical data.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<Trial>> {
    spec.validate()?;
    let n = spec.signal_len();
    let nb = spec.baseline_len();
    let s = spec.effect_strength;

    let offsets: Vec<SubjectOffsets> = (0..spec.n_subjects)
        .map(|subj| {
            let mut g = Gen {
                rng: seeded(spec.seed, u64::MAX - subj as u64),
                fs: spec.sample_rate_hz,
            };
            let v = spec.subject_variance;
            SubjectOffsets {
                veog_freq: v * g.normal(),
                veog_noise: v * g.normal(),
                resp_freq: v * g.normal(),
                ppg_jitter: v * g.normal(),
                temp_drift: v * g.normal(),
                heart_rate: 0.1 * g.normal(),
            }
        })
        .collect();

    let ids: Vec<(usize, usize)> = (0..spec.n_subjects)
        .flat_map(|a| (0..spec.trials_per_subject).map(move |b| (a, b)))
        .collect();
    ids.par_iter()
        .map(|&(subj, trial)| {
            let mut g = Gen {
                rng: seeded(spec.seed, ((subj as u64) << 32) | trial as u64),
                fs: spec.sample_rate_hz,
            };
            let z = Latent {
                valence: g.normal(),
                arousal: g.normal(),
                liking: g.normal(),
            };
            let ratings = Ratings::new(
                rating(z.valence, g.normal()),
                rating(z.arousal, g.normal()),
                rating(z.liking, g.normal()),
            )?;
            let o = offsets[subj];
            let neutral = Latent {
                valence: 0.0,
                arousal: 0.0,
                liking: 0.0,
            };
            let mut channels = BTreeMap::new();
            let mut baselines = BTreeMap::new();
            for ch in ChannelKind::ALL {
                let base = g.channel(ch, nb, neutral, o, s);
                let sig = g.channel(ch, n, z, o, s);
                baselines.insert(ch, TimeSeries::new(base, spec.sample_rate_hz)?);
                channels.insert(ch, TimeSeries::new(sig, spec.sample_rate_hz)?);
            }
            Trial::new(subj as u32 + 1, trial as u32 + 1, channels, baselines, ratings)
        })
        .collect()
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
