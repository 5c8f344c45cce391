//! SHAP-guided forward selection on a feature table where only five of 51
//! columns carry the label. The curve should rise quickly and then stay
//! flat as noise columns are added.
//!
//! ```text
//! cargo run --release --example feature_selection -- [seed]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use physio_explain::eval::{run_loso, selection_sweep, Dataset, DatasetRow, LosoOptions, SelectionMode};
use physio_explain::signal::{Ratings, Target};

const INFORMATIVE: [usize; 5] = [4, 13, 22, 31, 44];

fn table(seed: u64) -> physio_explain::Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut rows = Vec::new();
    for subject in 1..=10 {
        for trial in 1..=40 {
            // Class first; informative columns are shifted by +-1.25 with it.
            let positive = normal() > -0.3;
            let shift = if positive { 1.25 } else { -1.25 };
            let features: Vec<f64> = (0..51)
                .map(|i| normal() + if INFORMATIVE.contains(&i) { shift } else { 0.0 })
                .collect();
            let u = normal().abs().min(3.0) / 3.0;
            let rating = if positive { 5.5 + 3.5 * u } else { 4.5 - 3.5 * u };
            rows.push(DatasetRow {
                subject_id: subject,
                trial_id: trial,
                features,
                ratings: Ratings::new(rating, 5.0, 5.0)?,
            });
        }
    }
    let names = (0..51)
        .map(|i| if INFORMATIVE.contains(&i) { format!("signal{i}") } else { format!("noise{i}") })
        .collect();
    Dataset::new(names, rows, Target::Valence)
}

fn main() -> physio_explain::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let ds = table(seed)?;
    let run = run_loso(
        &ds,
        &LosoOptions {
            search_iterations: 30,
            seed,
            ..Default::default()
        },
    )?;
    println!("LOSO f1 {:.3}, accuracy {:.3}", run.report.f1_mean, run.report.accuracy_mean);

    let curve = selection_sweep(&ds, &run, SelectionMode::FoldLocal, &())?;
    let best = curve.point(curve.best_k_f1).expect("best k is on the curve").f1_mean;
    for p in &curve.points {
        println!(
            "k={:>2} {:<9} f1 {:.3}±{:.3}  acc {:.3}",
            p.k,
            curve.ranking[p.k - 1],
            p.f1_mean,
            p.f1_stderr,
            p.accuracy_mean
        );
    }
    let worst_after_5 = curve.points[4..].iter().map(|p| p.f1_mean).fold(f64::INFINITY, f64::min);
    println!("best f1 {best:.3} at k={}, lowest f1 for k>=5: {worst_after_5:.3}", curve.best_k_f1);
    Ok(())
}
