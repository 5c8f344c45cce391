//! Trains the gradient-boosted classifier on an XOR-like problem with a
//! validation set, prints the loss curves and round-trips the model
//! through JSON.
//!
//! ```text
//! cargo run --release --example train_gbdt
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use physio_explain::gbdt::{train_with_history, FeatureMatrix, GbdtModel, TrainConfig};

fn data(rng: &mut ChaCha8Rng, n: usize) -> (FeatureMatrix, Vec<u8>) {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y = rows.iter().map(|r: &Vec<f64>| u8::from(r[0] * r[1] > 0.0)).collect();
    (FeatureMatrix::from_rows(&rows).expect("rows have equal width"), y)
}

fn main() -> physio_explain::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, y) = data(&mut rng, 600);
    let (vx, vy) = data(&mut rng, 200);
    let cfg = TrainConfig {
        learning_rate: 0.1,
        num_leaves: 8,
        max_depth: 4,
        min_data_in_leaf: 10,
        feature_fraction: 1.0,
        max_rounds: 300,
        early_stop: 20,
        ..Default::default()
    };
    let (model, history) = train_with_history(&x, &y, Some((&vx, &vy)), &cfg)?;
    for (i, (t, v)) in history.train_loss.iter().zip(&history.valid_loss).enumerate() {
        if i % 20 == 0 || i + 1 == history.train_loss.len() {
            println!("round {:>3}  train {:.4}  valid {:.4}", i + 1, t, v);
        }
    }
    println!("{} trees grown, best iteration {}", model.trees.len(), model.best_iteration);

    let correct = (0..vx.n_rows())
        .filter(|&i| model.predict(vx.row(i)).map(|p| p.class() == vy[i]).unwrap_or(false))
        .count();
    println!("validation accuracy {:.3}", correct as f64 / vx.n_rows() as f64);

    let restored = GbdtModel::from_json(&model.to_json()?)?;
    let same = (0..vx.n_rows()).all(|i| restored.predict(vx.row(i)).ok() == model.predict(vx.row(i)).ok());
    println!("JSON round trip preserves predictions: {same}");
    Ok(())
}
