//! Sample entropy, fuzzy entropy and energy of regular and irregular
//! series, then the full 51-feature vector of one synthetic trial.
//!
//! ```text
//! cargo run --release --example entropy_features
//! ```

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use physio_explain::features::{
    energy, extract_feature_vector, fuzzy_entropy, sample_entropy, ssa_components, EntropyConfig, FeatureSchema,
};
use physio_explain::pipeline::{generate_synthetic, SyntheticSpec};
use physio_explain::signal::{preprocess_trial, PreprocessConfig, TimeSeries};
use physio_explain::ssa::SsaConfig;

fn main() -> physio_explain::Result<()> {
    let cfg = EntropyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 1000;
    let series = [
        ("sine", (0..n).map(|i| (i as f64 * 0.2).sin()).collect::<Vec<_>>()),
        (
            "sine+noise",
            (0..n)
                .map(|i| (i as f64 * 0.2).sin() + 0.3 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect(),
        ),
        ("white noise", (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()),
    ];
    println!("{:<12} {:>8} {:>8} {:>8}", "series", "SampEn", "FuzzyEn", "energy");
    for (name, values) in series {
        let ts = TimeSeries::from_values(values)?;
        println!(
            "{name:<12} {:>8.4} {:>8.4} {:>8.4}",
            sample_entropy(&ts, &cfg)?,
            fuzzy_entropy(&ts, &cfg)?,
            energy(&ts)?
        );
    }

    let spec = SyntheticSpec {
        n_subjects: 2,
        trials_per_subject: 2,
        seconds: 10.0,
        ..Default::default()
    };
    let trial = generate_synthetic(&spec)?.remove(0);
    let pre = preprocess_trial(&trial, &PreprocessConfig::default())?;
    let ssa = SsaConfig::default();
    let comps: BTreeMap<_, _> = ssa_components(&pre, &ssa)?;
    let fv = extract_feature_vector(&comps, &FeatureSchema::from_ssa(&ssa)?, &cfg)?;
    println!("\n{} features of subject 1, trial 1:", fv.len());
    for chunk in fv.names.iter().zip(&fv.values).collect::<Vec<_>>().chunks(3) {
        let line: Vec<String> = chunk.iter().map(|(n, v)| format!("{n:<10} {v:>9.4}")).collect();
        println!("  {}", line.join("   "));
    }
    Ok(())
}
