//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::extract::ExtractConfig;
use super::ingest::DatasetLayout;
use super::synth::SyntheticSpec;
use crate::error::{Error, Result};
use crate::eval::{LosoOptions, SearchMode, SelectionMode};
use crate::features::EntropyConfig;
use crate::gbdt::SearchSpace;
use crate::signal::{PreprocessConfig, Target};
use crate::ssa::SsaConfig;

/// Everything a pipeline run needs. Unknown keys are rejected and
/// [`RunConfig::validate`] runs before any work starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub targets: Vec<Target>,
    /// Directory in the per-trial CSV layout. Mutually exclusive with
    /// `synthetic`.
    pub input: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    pub layout: DatasetLayout,
    pub output: PathBuf,
    pub search_iterations: usize,
    pub search_mode: SearchMode,
    pub selection_mode: SelectionMode,
    /// Features shown in the interaction summary.
    pub top_interactions: usize,
    /// Features that get an `effects_<feature>.csv` file per target.
    pub effect_features: usize,
    pub preprocess: PreprocessConfig,
    pub ssa: SsaConfig,
    pub entropy: EntropyConfig,
    pub search: SearchSpace,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            targets: Target::ALL.to_vec(),
            input: None,
            synthetic: None,
            layout: DatasetLayout::default(),
            output: PathBuf::from("out"),
            search_iterations: 300,
            search_mode: SearchMode::PerFold,
            selection_mode: SelectionMode::FoldLocal,
            top_interactions: 10,
            effect_features: 3,
            preprocess: PreprocessConfig::default(),
            ssa: SsaConfig::default(),
            entropy: EntropyConfig::default(),
            search: SearchSpace::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Pins the published settings: window length 12, smoothing spans 64
    /// and 5, entropy m = 2, r = 0.15, n = 2, 300 search iterations, up to
    /// 500 rounds and early stopping after 30.
    pub fn paper_mode(mut self) -> Self {
        let seed = self.seed;
        self.preprocess = PreprocessConfig::default();
        self.ssa = SsaConfig::default();
        self.entropy = EntropyConfig::default();
        self.search_iterations = 300;
        self.search = SearchSpace::default();
        self.search.base.max_rounds = 500;
        self.search.base.early_stop = 30;
        self.seed = seed;
        self
    }

    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig {
            preprocess: self.preprocess.clone(),
            ssa: self.ssa.clone(),
            entropy: self.entropy.clone(),
        }
    }

    pub fn loso_options(&self) -> LosoOptions {
        LosoOptions {
            search_iterations: self.search_iterations,
            space: self.search.clone(),
            seed: self.seed,
            search_mode: self.search_mode,
            explain: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        };
        if self.targets.is_empty() {
            return Err(Error::Config("at least one target is required".into()));
        }
        let mut seen = self.targets.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.targets.len() {
            return Err(Error::Config("targets contain duplicates".into()));
        }
        if self.input.is_some() && self.synthetic.is_some() {
            return Err(Error::Config("set either input or synthetic, not both".into()));
        }
        if let Some(s) = &self.synthetic {
            s.validate()?;
        }
        if self.search_iterations == 0 {
            return Err(Error::Config("search_iterations must be >= 1".into()));
        }
        if self.top_interactions == 0 {
            return Err(Error::Config("top_interactions must be >= 1".into()));
        }
        self.layout.validate()?;
        self.extract_config().validate().map_err(cfg)?;
        self.search.validate().map_err(cfg)?;
        self.search.base.validate().map_err(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("seed = 1\nsead = 2\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = RunConfig::from_toml_str("[entropy]\nradius = 0.2\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let cfg = RunConfig::from_toml_str(
            "targets = [\"valence\"]\nsearch_iterations = 5\n[synthetic]\nn_subjects = 3\nseconds = 8.0\n",
        )
        .unwrap();
        assert_eq!(cfg.targets, vec![Target::Valence]);
        assert_eq!(cfg.synthetic.unwrap().n_subjects, 3);
        assert_eq!(cfg.ssa, SsaConfig::default());
    }

    #[test]
    fn invalid_values_fail_fast() {
        for text in [
            "targets = []",
            "search_iterations = 0",
            "[ssa]\nwindow_len = 1",
            "[entropy]\ntolerance = -1.0",
            "[synthetic]\neffect_strength = 2.0",
            "[search]\nnum_leaves = [30, 5]",
            "input = \"x\"\n[synthetic]\nseed = 1",
        ] {
            assert!(RunConfig::from_toml_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn paper_mode_pins_values() {
        let mut cfg = RunConfig::default();
        cfg.search_iterations = 7;
        cfg.ssa.window_len = 20;
        cfg.seed = 4;
        let p = cfg.paper_mode();
        assert_eq!(p.search_iterations, 300);
        assert_eq!(p.ssa.window_len, 12);
        assert_eq!(p.search.base.max_rounds, 500);
        assert_eq!(p.search.base.early_stop, 30);
        assert_eq!(p.seed, 4);
    }
}
