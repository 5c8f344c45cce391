//! Compares two feature sets fold by fold with the Wilcoxon signed-rank
//! test: all 51 columns against only the five informative ones.
//!
//! ```text
//! cargo run --release --example wilcoxon_compare
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use physio_explain::eval::{run_loso, wilcoxon_signed_rank, Dataset, DatasetRow, LosoOptions};
use physio_explain::signal::{Ratings, Target};

const INFORMATIVE: [usize; 5] = [4, 13, 22, 31, 44];

fn rows(seed: u64) -> physio_explain::Result<Vec<DatasetRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut out = Vec::new();
    for subject in 1..=10 {
        for trial in 1..=30 {
            let positive = normal() > 0.0;
            let shift = if positive { 0.6 } else { -0.6 };
            let features = (0..51).map(|i| normal() + if INFORMATIVE.contains(&i) { shift } else { 0.0 }).collect();
            out.push(DatasetRow {
                subject_id: subject,
                trial_id: trial,
                features,
                ratings: Ratings::new(if positive { 7.0 } else { 3.0 }, 5.0, 5.0)?,
            });
        }
    }
    Ok(out)
}

fn fold_f1(ds: &Dataset) -> physio_explain::Result<Vec<f64>> {
    let run = run_loso(
        ds,
        &LosoOptions {
            search_iterations: 20,
            explain: false,
            ..Default::default()
        },
    )?;
    Ok(run.report.folds.iter().map(|f| f.f1.unwrap_or(0.0)).collect())
}

fn main() -> physio_explain::Result<()> {
    let all_rows = rows(0)?;
    let names: Vec<String> = (0..51).map(|i| format!("x{i}")).collect();
    let full = Dataset::new(names.clone(), all_rows.clone(), Target::Valence)?;
    let few_rows = all_rows
        .into_iter()
        .map(|mut r| {
            r.features = INFORMATIVE.iter().map(|&i| r.features[i]).collect();
            r
        })
        .collect();
    let few = Dataset::new(INFORMATIVE.iter().map(|&i| names[i].clone()).collect(), few_rows, Target::Valence)?;

    let a = fold_f1(&full)?;
    let b = fold_f1(&few)?;
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        println!("subject {:>2}: all {x:.3}  informative {y:.3}", i + 1);
    }
    let w = wilcoxon_signed_rank(&b, &a)?;
    println!(
        "Wilcoxon ({:?}, n = {}): statistic {}, two-sided p = {:.4}",
        w.method, w.n, w.statistic, w.p_value
    );
    Ok(())
}
