//! Preprocesses one synthetic trial and prints per-channel statistics
//! before and after, plus the tonic/phasic split of skin conductance.
//!
//! ```text
//! cargo run --release --example preprocess_signal
//! ```

use physio_explain::pipeline::{generate_synthetic, SyntheticSpec};
use physio_explain::signal::{preprocess_trial, scr_split, ChannelKind, PreprocessConfig};

fn main() -> physio_explain::Result<()> {
    let spec = SyntheticSpec {
        n_subjects: 2,
        trials_per_subject: 2,
        seconds: 20.0,
        ..Default::default()
    };
    let trial = generate_synthetic(&spec)?.remove(0);
    let cfg = PreprocessConfig::default();
    let pre = preprocess_trial(&trial, &cfg)?;

    println!("{:<5} {:>4} {:>10} {:>9} {:>10} {:>9}", "chan", "span", "raw mean", "raw std", "out mean", "out std");
    for ch in ChannelKind::ALL {
        let raw = trial.channel(ch);
        let out = pre.channel(ch);
        println!(
            "{:<5} {:>4} {:>10.4} {:>9.4} {:>10.2e} {:>9.4}",
            ch.name(),
            cfg.span(ch),
            raw.mean(),
            raw.population_std(),
            out.mean(),
            out.population_std()
        );
    }

    let split = scr_split(trial.channel(ChannelKind::Scr), cfg.tonic_window_s)?;
    let worst = trial
        .channel(ChannelKind::Scr)
        .values()
        .iter()
        .zip(split.phasic.values().iter().zip(split.tonic.values()))
        .map(|(x, (p, t))| (x - (p + t)).abs())
        .fold(0.0, f64::max);
    println!(
        "SCR tonic mean {:.4}, phasic std {:.4}, max |x - (phasic + tonic)| = {worst:e}",
        split.tonic.mean(),
        split.phasic.population_std()
    );
    Ok(())
}
