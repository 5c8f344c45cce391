//! Writes a synthetic dataset in the on-disk recording layout, reads it
//! back and checks that nothing changed.
//!
//! ```text
//! cargo run --release --example synth_dataset -- <dir>
//! ```

use std::path::PathBuf;

use physio_explain::pipeline::{generate_synthetic, ingest_with_layout, write_dataset, DatasetLayout, IngestSummary, SyntheticSpec};

fn main() -> physio_explain::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("physio-explain-synth"));
    let spec = SyntheticSpec {
        n_subjects: 3,
        trials_per_subject: 4,
        seconds: 10.0,
        ..Default::default()
    };
    let trials = generate_synthetic(&spec)?;
    write_dataset(&dir, &trials)?;
    let layout = DatasetLayout {
        baseline_rows: spec.baseline_len(),
        signal_rows: spec.signal_len(),
        sample_rate_hz: spec.sample_rate_hz,
    };
    let back = ingest_with_layout(&dir, &layout)?;
    let summary = IngestSummary::of(&back);
    println!(
        "wrote {} trials to {}; read back {} subjects, {} trials",
        trials.len(),
        dir.display(),
        summary.subjects,
        summary.trials
    );
    println!("identical after round trip: {}", back == trials);
    Ok(())
}
