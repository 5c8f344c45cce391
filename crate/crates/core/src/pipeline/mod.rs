//! Data ingestion, synthetic recordings, feature extraction and the
//! end-to-end run that produces a report directory.

mod config;
mod extract;
mod ingest;
mod report;
mod run;
mod synth;

pub use config::RunConfig;
pub use extract::{calibrate_components, extract_features, ExtractConfig, FeatureTable};
pub use ingest::{
    ingest_dataset, ingest_with_layout, read_trial, write_dataset, DatasetLayout, IngestSummary,
};
pub use report::{
    emit_report, render_report, EffectPoint, EffectSeries, InteractionSummary, RunReport,
    TargetResults,
};
pub use run::{analyze_table, load_trials, run_pipeline, train_final, Stages};
pub use synth::{generate_synthetic, planted_channels, SyntheticSpec};
