//! Runs the whole pipeline on a small synthetic dataset and writes the
//! report directory: per-target LOSO results, SHAP importance, selection
//! curves, top interactions and effect series.
//!
//! ```text
//! cargo run --release --example full_report -- [out_dir]
//! ```

use std::path::PathBuf;

use physio_explain::pipeline::{emit_report, run_pipeline, RunConfig, Stages, SyntheticSpec};

fn main() -> physio_explain::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("physio-explain-report"));
    let cfg = RunConfig {
        synthetic: Some(SyntheticSpec {
            n_subjects: 6,
            trials_per_subject: 16,
            seconds: 6.0,
            ..Default::default()
        }),
        search_iterations: 20,
        output: out.clone(),
        ..Default::default()
    };
    cfg.validate()?;
    let report = run_pipeline(&cfg, Stages::ALL, &())?;
    for t in &report.targets {
        let top: Vec<&str> = t.importance.top(3).iter().map(|e| e.feature.as_str()).collect();
        println!(
            "{:<8} f1 {:.3}  accuracy {:.3}  top features {:?}",
            t.target.name(),
            t.cv.f1_mean,
            t.cv.accuracy_mean,
            top
        );
        if let Some(curve) = &t.selection {
            println!("         best k by f1 = {} ({:.3})", curve.best_k_f1, curve.point(curve.best_k_f1).map_or(0.0, |p| p.f1_mean));
        }
    }
    for path in emit_report(&report, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
