//! Exact Shapley explanations for [`GbdtModel`] ensembles.
//!
//! All attributions use the path-dependent value function: the value of a
//! coalition `T` is the expected margin when features outside `T` are
//! marginalized by descending both children of a split, weighted by their
//! training cover. Values are in margin (log-odds) units.

mod brute;
mod path;
mod selection;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::{FeatureMatrix, GbdtModel};
use path::{expected_value, tree_shap, Condition, FlatTree};

pub use brute::{brute_force_interactions, brute_force_shapley, BRUTE_FORCE_MAX_FEATURES};
pub use selection::{select_features, SelectionCurve, SelectionPoint};

/// Per-feature attributions of one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub feature_names: Vec<String>,
    pub values: Vec<f64>,
    /// Expected margin over the training distribution.
    pub base_value: f64,
}

impl ShapExplanation {
    /// `base_value + sum(values)`, which equals the model margin.
    pub fn output(&self) -> f64 {
        self.base_value + self.values.iter().sum::<f64>()
    }
}

/// Pairwise SHAP interaction values of one sample. Off-diagonal entries split
/// each pair effect evenly; the diagonal holds the main effects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    pub feature_names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl InteractionMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.values.iter().map(|r| r.iter().sum()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    /// Position of the feature in the model's feature list.
    pub index: usize,
    pub mean_abs_shap: f64,
}

/// Features sorted by descending mean |SHAP|, ties in feature order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceRanking {
    pub fn feature_names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.feature.clone()).collect()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.index).collect()
    }

    pub fn top(&self, k: usize) -> &[ImportanceEntry] {
        &self.entries[..k.min(self.entries.len())]
    }
}

/// A model prepared for repeated explanation.
pub struct TreeExplainer<'a> {
    model: &'a GbdtModel,
    trees: Vec<FlatTree>,
    base_value: f64,
    used: Vec<bool>,
}

impl<'a> TreeExplainer<'a> {
    /// Fails with `ModelIncompatible` when covers are missing or a split
    /// refers to an unknown feature.
    pub fn new(model: &'a GbdtModel) -> Result<Self> {
        model.validate()?;
        let trees = FlatTree::flatten(model);
        let base_value = model.base_score + trees.iter().map(expected_value).sum::<f64>();
        let mut used = vec![false; model.n_features()];
        for t in model.active_trees() {
            t.visit(&mut |n| {
                if let crate::gbdt::TreeNode::Split { feature, .. } = n {
                    used[*feature] = true;
                }
            });
        }
        Ok(Self {
            model,
            trees,
            base_value,
            used,
        })
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.model.n_features() {
            return Err(Error::invalid(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.model.n_features()
            )));
        }
        Ok(())
    }

    fn raw(&self, x: &[f64], condition: Condition) -> Vec<f64> {
        let mut phi = vec![0.0; x.len()];
        for t in &self.trees {
            tree_shap(t, x, &mut phi, condition);
        }
        phi
    }

    pub fn shap_values(&self, x: &[f64]) -> Result<ShapExplanation> {
        self.check(x)?;
        Ok(ShapExplanation {
            feature_names: self.model.feature_names.clone(),
            values: self.raw(x, Condition::None),
            base_value: self.base_value,
        })
    }

    pub fn shap_interactions(&self, x: &[f64]) -> Result<InteractionMatrix> {
        self.check(x)?;
        let n = x.len();
        let phi = self.raw(x, Condition::None);
        let mut m = vec![vec![0.0; n]; n];
        for j in (0..n).filter(|&j| self.used[j]) {
            let on = self.raw(x, Condition::On(j));
            let off = self.raw(x, Condition::Off(j));
            for i in (0..n).filter(|&i| i != j) {
                m[i][j] = (on[i] - off[i]) / 2.0;
            }
        }
        for i in 0..n {
            let off_diag: f64 = (0..n).filter(|&j| j != i).map(|j| m[i][j]).sum();
            m[i][i] = phi[i] - off_diag;
        }
        Ok(InteractionMatrix {
            feature_names: self.model.feature_names.clone(),
            values: m,
        })
    }

    /// Explanations for every row, computed in parallel.
    pub fn explain_matrix(&self, x: &FeatureMatrix) -> Result<Vec<ShapExplanation>> {
        (0..x.n_rows())
            .into_par_iter()
            .map(|r| self.shap_values(x.row(r)))
            .collect()
    }
}

/// Exact SHAP values of `x`; `base_value + sum(values)` equals the margin.
pub fn shap_values(model: &GbdtModel, x: &[f64]) -> Result<ShapExplanation> {
    TreeExplainer::new(model)?.shap_values(x)
}

/// SHAP interaction matrix of `x`. Entry `(i, j)` is half the change in
/// feature `i`'s attribution between `j` present and `j` absent. The
/// diagonal makes every row sum to the feature's SHAP value.
pub fn shap_interactions(model: &GbdtModel, x: &[f64]) -> Result<InteractionMatrix> {
    TreeExplainer::new(model)?.shap_interactions(x)
}

/// Ranks features by mean absolute SHAP value across `explanations`.
pub fn global_importance(explanations: &[ShapExplanation]) -> Result<ImportanceRanking> {
    let first = explanations
        .first()
        .ok_or_else(|| Error::invalid("no explanations to rank"))?;
    let names = &first.feature_names;
    let mut sums = vec![0.0; names.len()];
    for e in explanations {
        if e.feature_names != *names || e.values.len() != names.len() {
            return Err(Error::invalid("explanations have inconsistent features"));
        }
        for (s, v) in sums.iter_mut().zip(&e.values) {
            *s += v.abs();
        }
    }
    let n = explanations.len() as f64;
    let mut entries: Vec<ImportanceEntry> = names
        .iter()
        .zip(sums)
        .enumerate()
        .map(|(index, (feature, s))| ImportanceEntry {
            feature: feature.clone(),
            index,
            mean_abs_shap: s / n,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.mean_abs_shap
            .total_cmp(&a.mean_abs_shap)
            .then(a.index.cmp(&b.index))
    });
    Ok(ImportanceRanking { entries })
}

/// Sample x feature CSV with a leading `base_value` column.
pub fn explanations_to_csv(explanations: &[ShapExplanation]) -> Result<String> {
    let Some(first) = explanations.first() else {
        return Ok(String::new());
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sample".to_string(), "base_value".to_string()];
    header.extend(first.feature_names.iter().cloned());
    w.write_record(&header)?;
    for (i, e) in explanations.iter().enumerate() {
        let mut rec = vec![i.to_string(), e.base_value.to_string()];
        rec.extend(e.values.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::NumericalFailure(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbdt::TreeNode;

    fn model(trees: Vec<TreeNode>, n: usize) -> GbdtModel {
        GbdtModel {
            feature_names: (0..n).map(|i| format!("f{i}")).collect(),
            learning_rate: 0.5,
            base_score: -0.2,
            best_iteration: trees.len(),
            trees,
        }
    }

    #[test]
    fn single_leaf_model() {
        let m = model(vec![TreeNode::leaf(3.0, 10.0)], 2);
        let e = shap_values(&m, &[1.0, 2.0]).unwrap();
        assert_eq!(e.values, vec![0.0, 0.0]);
        assert_eq!(e.base_value, -0.2 + 0.5 * 3.0);
    }

    #[test]
    fn stump_attribution() {
        let t = TreeNode::split(1, 0.0, TreeNode::leaf(-1.0, 30.0), TreeNode::leaf(2.0, 10.0));
        let m = model(vec![t], 3);
        let x = [5.0, 1.0, -4.0];
        let e = shap_values(&m, &x).unwrap();
        let margin = m.predict(&x).unwrap().margin;
        let mean = -0.2 + 0.5 * (30.0 * -1.0 + 10.0 * 2.0) / 40.0;
        assert!((e.values[1] - (margin - mean)).abs() < 1e-12);
        assert_eq!(e.values[0], 0.0);
        assert_eq!(e.values[2], 0.0);
        assert!((e.output() - margin).abs() < 1e-12);
    }

    #[test]
    fn repeated_feature_on_path() {
        let inner = TreeNode::split(0, 2.0, TreeNode::leaf(1.0, 5.0), TreeNode::leaf(4.0, 15.0));
        let t = TreeNode::split(0, 0.0, TreeNode::leaf(-3.0, 20.0), inner);
        let t2 = TreeNode::split(1, 0.5, TreeNode::leaf(0.5, 25.0), TreeNode::leaf(-0.5, 15.0));
        let m = model(vec![t, t2], 2);
        for x in [[1.0, 0.0], [3.0, 1.0], [-1.0, 0.7]] {
            let fast = shap_values(&m, &x).unwrap();
            let slow = brute_force_shapley(&m, &x).unwrap();
            for (a, b) in fast.values.iter().zip(&slow.values) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn missing_cover_rejected() {
        let mut m = model(vec![TreeNode::leaf(1.0, 1.0)], 1);
        m.trees[0] = TreeNode::Leaf {
            value: 1.0,
            cover: f64::NAN,
        };
        assert!(matches!(
            shap_values(&m, &[0.0]),
            Err(Error::ModelIncompatible(_))
        ));
    }

    #[test]
    fn additive_model_has_no_interactions() {
        let a = TreeNode::split(0, 0.0, TreeNode::leaf(-1.0, 12.0), TreeNode::leaf(1.5, 8.0));
        let b = TreeNode::split(1, 1.0, TreeNode::leaf(0.3, 5.0), TreeNode::leaf(-0.7, 15.0));
        let m = model(vec![a, b], 2);
        let im = shap_interactions(&m, &[0.5, 0.2]).unwrap();
        assert!(im.get(0, 1).abs() < 1e-12 && im.get(1, 0).abs() < 1e-12);
        let e = shap_values(&m, &[0.5, 0.2]).unwrap();
        for (r, v) in im.row_sums().iter().zip(&e.values) {
            assert!((r - v).abs() < 1e-12);
        }
    }

    #[test]
    fn importance_ordering() {
        let names: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let ex = |v: Vec<f64>| ShapExplanation {
            feature_names: names.clone(),
            values: v,
            base_value: 0.0,
        };
        let r = global_importance(&[ex(vec![0.1, -2.0, 0.1]), ex(vec![-0.3, 1.0, 0.1])]).unwrap();
        assert_eq!(r.feature_names(), vec!["b", "a", "c"]);
        assert!((r.entries[0].mean_abs_shap - 1.5).abs() < 1e-15);

        let zero = global_importance(&[ex(vec![0.0; 3])]).unwrap();
        assert_eq!(zero.indices(), vec![0, 1, 2]);
        assert!(global_importance(&[]).is_err());
    }

    #[test]
    fn csv_export() {
        let e = ShapExplanation {
            feature_names: vec!["a".into(), "b".into()],
            values: vec![0.5, -1.0],
            base_value: 0.25,
        };
        let s = explanations_to_csv(&[e]).unwrap();
        assert_eq!(s, "sample,base_value,a,b\n0,0.25,0.5,-1\n");
    }
}
