//! Polynomial-time path-dependent TreeSHAP.
//!
//! Each root-to-leaf path keeps, for every distinct feature on it, the
//! fraction of cover that flows through when the feature is missing
//! (`zero`) and whether `x` follows the path when it is present (`one`).
//! The permutation weights of all subset sizes are updated incrementally as
//! the path grows, which brings the cost per tree to `O(leaves * depth^2)`.

use crate::gbdt::{GbdtModel, TreeNode};

const NONE: usize = usize::MAX;

/// A tree flattened into parallel arrays. Leaf values are pre-scaled by the
/// learning rate so contributions land directly in margin units.
pub(crate) struct FlatTree {
    left: Vec<usize>,
    right: Vec<usize>,
    feature: Vec<usize>,
    threshold: Vec<f64>,
    value: Vec<f64>,
    cover: Vec<f64>,
    depth: usize,
}

impl FlatTree {
    pub(crate) fn new(tree: &TreeNode, scale: f64) -> Self {
        let mut t = FlatTree {
            left: Vec::new(),
            right: Vec::new(),
            feature: Vec::new(),
            threshold: Vec::new(),
            value: Vec::new(),
            cover: Vec::new(),
            depth: tree.depth(),
        };
        t.push(tree, scale);
        t
    }

    fn push(&mut self, node: &TreeNode, scale: f64) -> usize {
        let id = self.left.len();
        self.left.push(NONE);
        self.right.push(NONE);
        self.feature.push(NONE);
        self.threshold.push(0.0);
        self.value.push(0.0);
        self.cover.push(node.cover());
        match node {
            TreeNode::Leaf { value, .. } => self.value[id] = value * scale,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                self.feature[id] = *feature;
                self.threshold[id] = *threshold;
                let l = self.push(left, scale);
                let r = self.push(right, scale);
                self.left[id] = l;
                self.right[id] = r;
            }
        }
        id
    }

    pub(crate) fn flatten(model: &GbdtModel) -> Vec<FlatTree> {
        model
            .active_trees()
            .iter()
            .map(|t| FlatTree::new(t, model.learning_rate))
            .collect()
    }

    fn is_leaf(&self, i: usize) -> bool {
        self.left[i] == NONE
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct PathElement {
    feature: usize,
    zero: f64,
    one: f64,
    weight: f64,
}

/// How a single feature is treated while walking the tree: as usual, forced
/// present (`On`) or forced absent (`Off`). The forced feature is left out
/// of the game, which yields the conditional values used for interactions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Condition {
    None,
    On(usize),
    Off(usize),
}

impl Condition {
    fn feature(self) -> Option<usize> {
        match self {
            Condition::None => None,
            Condition::On(f) | Condition::Off(f) => Some(f),
        }
    }
}

fn extend(path: &mut [PathElement], depth: usize, zero: f64, one: f64, feature: usize) {
    path[depth] = PathElement {
        feature,
        zero,
        one,
        weight: if depth == 0 { 1.0 } else { 0.0 },
    };
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / d1;
        path[i].weight = zero * path[i].weight * (depth - i) as f64 / d1;
    }
}

fn unwind(path: &mut [PathElement], depth: usize, index: usize) {
    let one = path[index].one;
    let zero = path[index].zero;
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * d1 / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (depth - i) as f64 / d1;
        } else {
            path[i].weight = path[i].weight * d1 / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
}

/// Total permutation weight of the path with element `index` removed.
fn unwound_sum(path: &[PathElement], depth: usize, index: usize) -> f64 {
    let one = path[index].one;
    let zero = path[index].zero;
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next * d1 / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (depth - i) as f64 / d1;
        } else if zero != 0.0 {
            total += path[i].weight / zero / ((depth - i) as f64 / d1);
        }
    }
    total
}

struct Walk<'a> {
    tree: &'a FlatTree,
    x: &'a [f64],
    phi: &'a mut [f64],
    condition: Condition,
}

impl Walk<'_> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        node: usize,
        depth: usize,
        parent: &[PathElement],
        parent_zero: f64,
        parent_one: f64,
        parent_feature: usize,
        condition_fraction: f64,
    ) {
        if condition_fraction == 0.0 {
            return;
        }
        let mut path = vec![PathElement::default(); depth + 1];
        let copy = parent.len().min(depth + 1);
        path[..copy].copy_from_slice(&parent[..copy]);
        if self.condition.feature() != Some(parent_feature) {
            extend(&mut path, depth, parent_zero, parent_one, parent_feature);
        }
        let mut depth = depth;
        let t = self.tree;

        if t.is_leaf(node) {
            for i in 1..=depth {
                let w = unwound_sum(&path, depth, i);
                let el = path[i];
                self.phi[el.feature] += w * (el.one - el.zero) * t.value[node] * condition_fraction;
            }
            return;
        }

        let split = t.feature[node];
        let (hot, cold) = if self.x[split] <= t.threshold[node] {
            (t.left[node], t.right[node])
        } else {
            (t.right[node], t.left[node])
        };
        let w = t.cover[node];
        let hot_zero = t.cover[hot] / w;
        let cold_zero = t.cover[cold] / w;
        let mut incoming_zero = 1.0;
        let mut incoming_one = 1.0;

        // A feature seen higher up is merged into a single path element.
        if let Some(k) = (0..=depth).find(|&k| path[k].feature == split) {
            incoming_zero = path[k].zero;
            incoming_one = path[k].one;
            unwind(&mut path, depth, k);
            depth -= 1;
        }

        let mut hot_fraction = condition_fraction;
        let mut cold_fraction = condition_fraction;
        match self.condition {
            Condition::On(f) if f == split => {
                cold_fraction = 0.0;
                depth = depth.wrapping_sub(1);
            }
            Condition::Off(f) if f == split => {
                hot_fraction *= hot_zero;
                cold_fraction *= cold_zero;
                depth = depth.wrapping_sub(1);
            }
            _ => {}
        }
        let next = depth.wrapping_add(1);
        let path = &path[..];
        self.recurse(hot, next, path, hot_zero * incoming_zero, incoming_one, split, hot_fraction);
        self.recurse(cold, next, path, cold_zero * incoming_zero, 0.0, split, cold_fraction);
    }
}

/// Adds the contribution of `tree` at `x` to `phi` (one slot per feature).
pub(crate) fn tree_shap(tree: &FlatTree, x: &[f64], phi: &mut [f64], condition: Condition) {
    let root: Vec<PathElement> = Vec::with_capacity(tree.depth + 2);
    let mut walk = Walk {
        tree,
        x,
        phi,
        condition,
    };
    walk.recurse(0, 0, &root, 1.0, 1.0, NONE, 1.0);
}

/// Cover-weighted mean output of a flattened tree.
pub(crate) fn expected_value(tree: &FlatTree) -> f64 {
    let root_cover = tree.cover[0];
    (0..tree.value.len())
        .filter(|&i| tree.is_leaf(i))
        .map(|i| tree.value[i] * tree.cover[i])
        .sum::<f64>()
        / root_cover
}
