//! Exact TreeSHAP values and interaction values for a trained model,
//! checked against the model output and a brute-force enumeration.
//!
//! ```text
//! cargo run --release --example explain_shap
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use physio_explain::gbdt::{train, FeatureMatrix, TrainConfig};
use physio_explain::treeshap::{brute_force_shapley, global_importance, TreeExplainer};

fn main() -> physio_explain::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, f) = (400, 6);
    let data: Vec<f64> = (0..n * f).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = FeatureMatrix::new(n, f, data)?;
    // Feature 0 acts alone, features 1 and 2 only together.
    let y: Vec<u8> = (0..n)
        .map(|i| {
            let r = x.row(i);
            u8::from(r[0] + 1.5 * r[1] * r[2] > 0.0)
        })
        .collect();
    let names = ["alone", "pair_a", "pair_b", "noise1", "noise2", "noise3"].map(String::from).to_vec();
    let cfg = TrainConfig {
        learning_rate: 0.1,
        num_leaves: 8,
        max_depth: 4,
        min_data_in_leaf: 10,
        max_rounds: 100,
        ..Default::default()
    };
    let model = train(&x, &y, None, &cfg)?.with_feature_names(names.clone())?;
    let explainer = TreeExplainer::new(&model)?;
    println!("expected margin {:.4}", explainer.base_value());

    let row = x.row(0);
    let shap = explainer.shap_values(row)?;
    let brute = brute_force_shapley(&model, row)?;
    let margin = model.predict(row)?.margin;
    println!("row 0: margin {margin:.6}, base + sum(shap) {:.6}", shap.output());
    for (i, name) in names.iter().enumerate() {
        println!("  {name:<7} {:>9.5}  (brute force {:>9.5})", shap.values[i], brute.values[i]);
    }

    let inter = explainer.shap_interactions(row)?;
    println!("interaction pair_a x pair_b {:.5}, alone x pair_a {:.5}", inter.get(1, 2), inter.get(0, 1));

    let all = explainer.explain_matrix(&x)?;
    let ranking = global_importance(&all)?;
    println!("global importance:");
    for e in &ranking.entries {
        println!("  {:<7} {:.4}", e.feature, e.mean_abs_shap);
    }
    Ok(())
}
