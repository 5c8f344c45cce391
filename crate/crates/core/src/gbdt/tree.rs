use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major sample x feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} values, expected {rows} x {cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged feature rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Columns at `indices`, in that order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(indices.iter().map(|&c| row[c]));
        }
        Self {
            rows: self.rows,
            cols: indices.len(),
            data,
        }
    }
}

/// A regression tree node. Samples with `x[feature] <= threshold` go left.
///
/// `cover` is the total training weight that reached the node; TreeSHAP uses
/// it to marginalize features that are not in a coalition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        #[serde(default = "missing_cover")]
        cover: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        #[serde(default = "missing_cover")]
        cover: f64,
    },
}

fn missing_cover() -> f64 {
    f64::NAN
}

impl TreeNode {
    pub fn leaf(value: f64, cover: f64) -> Self {
        TreeNode::Leaf { value, cover }
    }

    pub fn split(feature: usize, threshold: f64, left: TreeNode, right: TreeNode) -> Self {
        let cover = left.cover() + right.cover();
        TreeNode::Split {
            feature,
            threshold,
            cover,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn cover(&self) -> f64 {
        match self {
            TreeNode::Split { cover, .. } | TreeNode::Leaf { cover, .. } => *cover,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Output of the tree for `x`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Largest feature index used by any split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature,
                left,
                right,
                ..
            } => Some(
                (*feature)
                    .max(left.max_feature().unwrap_or(0))
                    .max(right.max_feature().unwrap_or(0)),
            ),
        }
    }

    /// Visits every node depth-first, parent before children.
    pub fn visit(&self, f: &mut impl FnMut(&TreeNode)) {
        f(self);
        if let TreeNode::Split { left, right, .. } = self {
            left.visit(f);
            right.visit(f);
        }
    }

    /// Cover-weighted mean output, i.e. the expected prediction over the
    /// training distribution.
    pub fn expected_value(&self) -> f64 {
        match self {
            TreeNode::Leaf { value, .. } => *value,
            TreeNode::Split {
                cover, left, right, ..
            } => (left.cover() * left.expected_value() + right.cover() * right.expected_value()) / cover,
        }
    }
}

/// Margin and probability of one prediction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub margin: f64,
    pub probability: f64,
}

impl Prediction {
    pub fn from_margin(margin: f64) -> Self {
        Self {
            margin,
            probability: sigmoid(margin),
        }
    }

    pub fn class(&self) -> u8 {
        u8::from(self.probability > 0.5)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// A trained boosted ensemble. The margin is
/// `base_score + learning_rate * sum of the first best_iteration trees`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub feature_names: Vec<String>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub best_iteration: usize,
    pub trees: Vec<TreeNode>,
}

impl GbdtModel {
    /// Trees that contribute to predictions.
    pub fn active_trees(&self) -> &[TreeNode] {
        &self.trees[..self.best_iteration.min(self.trees.len())]
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features() {
            return Err(Error::invalid(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.n_features()
            )));
        }
        Ok(Prediction::from_margin(self.margin_unchecked(x)))
    }

    pub(crate) fn margin_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.active_trees().iter().map(|t| t.predict(x)).sum();
        self.base_score + self.learning_rate * sum
    }

    /// Predictions for every row of `x`.
    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<Prediction>> {
        (0..x.n_rows()).map(|r| self.predict(x.row(r))).collect()
    }

    /// Checks the structural invariants the explainers rely on: every split
    /// feature indexes `feature_names`, every cover is finite and positive
    /// and leaf values are finite.
    pub fn validate(&self) -> Result<()> {
        if self.best_iteration > self.trees.len() {
            return Err(Error::ModelIncompatible(format!(
                "best_iteration {} exceeds {} trees",
                self.best_iteration,
                self.trees.len()
            )));
        }
        for (t, tree) in self.trees.iter().enumerate() {
            let mut problem = None;
            tree.visit(&mut |node| {
                if problem.is_some() {
                    return;
                }
                if !(node.cover().is_finite() && node.cover() > 0.0) {
                    problem = Some("missing or non-positive cover".to_string());
                }
                match node {
                    TreeNode::Split { feature, .. } if *feature >= self.n_features() => {
                        problem = Some(format!("split on unknown feature {feature}"));
                    }
                    TreeNode::Leaf { value, .. } if !value.is_finite() => {
                        problem = Some("non-finite leaf value".into());
                    }
                    _ => {}
                }
            });
            if let Some(p) = problem {
                return Err(Error::ModelIncompatible(format!("tree {t}: {p}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> TreeNode {
        TreeNode::split(0, 0.5, TreeNode::leaf(-1.0, 30.0), TreeNode::leaf(2.0, 10.0))
    }

    fn model(trees: Vec<TreeNode>) -> GbdtModel {
        GbdtModel {
            feature_names: vec!["a".into(), "b".into()],
            learning_rate: 0.1,
            base_score: 0.3,
            best_iteration: trees.len(),
            trees,
        }
    }

    #[test]
    fn empty_model_predicts_prior() {
        let m = model(vec![]);
        let p = m.predict(&[0.0, 0.0]).unwrap();
        assert_eq!(p.margin, 0.3);
        assert_eq!(p.probability, sigmoid(0.3));
    }

    #[test]
    fn zero_margin_is_half() {
        assert_eq!(Prediction::from_margin(0.0).probability, 0.5);
        assert_eq!(Prediction::from_margin(0.0).class(), 0);
    }

    #[test]
    fn stump_traversal() {
        let m = model(vec![stump()]);
        let below = m.predict(&[0.2, 9.0]).unwrap();
        assert_eq!(below.margin, 0.3 + 0.1 * -1.0);
        let above = m.predict(&[0.7, 9.0]).unwrap();
        assert_eq!(above.margin, 0.3 + 0.1 * 2.0);
        assert!(m.predict(&[0.2]).is_err());
    }

    #[test]
    fn best_iteration_limits_trees() {
        let mut m = model(vec![stump(), stump()]);
        m.best_iteration = 1;
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap().margin, 0.3 - 0.1);
    }

    #[test]
    fn structure_helpers() {
        let t = stump();
        assert_eq!(t.cover(), 40.0);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.leaf_count(), 2);
        assert_eq!(t.expected_value(), (30.0 * -1.0 + 10.0 * 2.0) / 40.0);
    }

    #[test]
    fn json_round_trip_and_missing_cover() {
        let m = model(vec![stump()]);
        let back = GbdtModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);

        let raw = r#"{"feature_names":["a"],"learning_rate":1.0,"base_score":0.0,
            "best_iteration":1,"trees":[{"type":"leaf","value":1.0}]}"#;
        let m = GbdtModel::from_json(raw).unwrap();
        assert!(matches!(m.validate(), Err(Error::ModelIncompatible(_))));
    }

    #[test]
    fn matrix_selection() {
        let m = FeatureMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.select_rows(&[1]).row(0), &[4.0, 5.0, 6.0]);
        assert_eq!(m.select_columns(&[2, 0]).row(1), &[6.0, 4.0]);
        assert!(FeatureMatrix::from_rows(&[vec![1.0], vec![]]).is_err());
    }
}
