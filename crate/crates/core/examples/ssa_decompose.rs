//! Singular spectrum analysis of a noisy two-tone signal: singular values,
//! the hard-threshold rank and how well the leading components recover the
//! clean signal.
//!
//! ```text
//! cargo run --release --example ssa_decompose -- [noise_std]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use physio_explain::signal::TimeSeries;
use physio_explain::ssa::{decompose, hard_threshold_rank, reconstruct_selected};

fn main() -> physio_explain::Result<()> {
    let noise: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let fs = 128.0;
    let n = 1024;
    let clean: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (2.0 * std::f64::consts::PI * 1.5 * t).sin() + 0.5 * (2.0 * std::f64::consts::PI * 6.0 * t).cos()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dist = Normal::new(0.0, noise).expect("noise std must be non-negative");
    let noisy: Vec<f64> = clean.iter().map(|c| c + dist.sample(&mut rng)).collect();
    let ts = TimeSeries::new(noisy, fs)?;

    let d = decompose(&ts, 12)?;
    let (l, k) = d.trajectory_shape();
    println!("trajectory matrix {l} x {k}, rank {}", d.rank);
    for (i, s) in d.singular_values.iter().enumerate() {
        println!("  sigma{:<2} {:>9.3}", i + 1, s);
    }
    let keep = hard_threshold_rank(&d.singular_values, l, k);
    println!("hard threshold keeps {keep} components");

    let rmse = |x: &[f64]| (x.iter().zip(&clean).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64).sqrt();
    for count in [keep.max(1), 4, d.rank] {
        let indices: Vec<usize> = (1..=count).collect();
        let rec = reconstruct_selected(&d, &indices)?;
        println!("first {count:>2} components: rmse vs clean {:.4}", rmse(rec.values()));
    }
    println!("raw noisy series:     rmse vs clean {:.4}", rmse(ts.values()));
    Ok(())
}
