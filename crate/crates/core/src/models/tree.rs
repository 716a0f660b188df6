//! Exact-greedy CART regression trees.
//!
//! Splits are found by sorting node samples on each candidate slot and
//! sweeping every boundary between distinct values. The score of a split is
//! `S_l^2/(n_l+lambda) + S_r^2/(n_r+lambda) - S^2/(n+lambda)`, which for
//! `lambda = 0` is the reduction in squared error. Ties keep the first split
//! found, i.e. the lower slot index and then the lower threshold.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Column-major feature matrix.
#[derive(Debug, Clone)]
pub struct Matrix {
    n_rows: usize,
    columns: Vec<Vec<f64>>,
}

impl Matrix {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, n_cols: usize) -> Self {
        let mut columns = vec![Vec::new(); n_cols];
        let mut n_rows = 0;
        for row in rows {
            debug_assert_eq!(row.len(), n_cols);
            for (col, v) in columns.iter_mut().zip(row) {
                col.push(*v);
            }
            n_rows += 1;
        }
        Matrix { n_rows, columns }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.columns[j][i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Number of slots drawn (without replacement) at every split; `None` uses all.
    pub max_features: Option<usize>,
    /// L2 penalty on leaf values.
    pub lambda: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, min_samples_leaf: 1, max_features: None, lambda: 0.0 }
    }
}

/// Flattened tree. Node 0 is the root; `feature[i] < 0` marks a leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub value: Vec<f64>,
}

impl Tree {
    fn push_node(&mut self, value: f64) -> usize {
        self.feature.push(-1);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.value.push(value);
        self.value.len() - 1
    }

    /// A single leaf.
    pub fn constant(value: f64) -> Self {
        let mut tree = Tree { feature: vec![], threshold: vec![], left: vec![], right: vec![], value: vec![] };
        tree.push_node(value);
        tree
    }

    pub fn n_nodes(&self) -> usize {
        self.value.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.feature.iter().filter(|f| **f < 0).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            if t.feature[i] < 0 {
                0
            } else {
                1 + walk(t, t.left[i] as usize).max(walk(t, t.right[i] as usize))
            }
        }
        walk(self, 0)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        while self.feature[i] >= 0 {
            let f = self.feature[i] as usize;
            i = if x[f] <= self.threshold[i] { self.left[i] } else { self.right[i] } as usize;
        }
        self.value[i]
    }

    /// Structural checks used when loading persisted trees.
    pub fn validate(&self, n_features: usize) -> Result<(), String> {
        let n = self.value.len();
        if n == 0 {
            return Err("empty tree".into());
        }
        if [self.feature.len(), self.threshold.len(), self.left.len(), self.right.len()].iter().any(|l| *l != n) {
            return Err("tree arrays differ in length".into());
        }
        for i in 0..n {
            if !self.value[i].is_finite() {
                return Err(format!("node {i} has a non-finite value"));
            }
            if self.feature[i] >= 0 {
                if self.feature[i] as usize >= n_features {
                    return Err(format!("node {i} splits on slot {} of {n_features}", self.feature[i]));
                }
                if !self.threshold[i].is_finite() {
                    return Err(format!("node {i} has a non-finite threshold"));
                }
                // Children are always allocated after their parent.
                let (l, r) = (self.left[i] as usize, self.right[i] as usize);
                if l <= i || r <= i || l >= n || r >= n {
                    return Err(format!("node {i} has invalid children"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn leaf_value(sum: f64, n: usize, lambda: f64) -> f64 {
    sum / (n as f64 + lambda)
}

/// Fits one tree on `samples` (row indices, repeats allowed). `rng` is only
/// consulted when `params.max_features` subsamples slots.
pub fn fit_tree<R: Rng + ?Sized>(x: &Matrix, y: &[f64], samples: Vec<usize>, params: &TreeParams, rng: &mut R) -> Tree {
    let mut tree = Tree { feature: vec![], threshold: vec![], left: vec![], right: vec![], value: vec![] };
    let n_features = x.n_cols();
    let min_leaf = params.min_samples_leaf.max(1);
    let root_sum: f64 = samples.iter().map(|&i| y[i]).sum();
    let root = tree.push_node(leaf_value(root_sum, samples.len(), params.lambda));

    let mut stack = vec![(root, samples, 0usize)];
    let mut order: Vec<(f64, f64)> = Vec::new();
    let mut slots: Vec<usize> = Vec::with_capacity(n_features);
    while let Some((node, idx, depth)) = stack.pop() {
        let n = idx.len();
        if params.max_depth.is_some_and(|d| depth >= d) || n < 2 * min_leaf {
            continue;
        }
        let first = y[idx[0]];
        if idx.iter().all(|&i| y[i] == first) {
            continue;
        }
        let total: f64 = idx.iter().map(|&i| y[i]).sum();
        let parent_score = total * total / (n as f64 + params.lambda);

        // Slots are drawn without replacement until `budget` non-constant
        // ones have been scored; constant slots do not use up the budget.
        let budget = params.max_features.filter(|&m| m < n_features).unwrap_or(n_features).max(1);
        slots.clear();
        slots.extend(0..n_features);
        let subsample = budget < n_features;
        let mut scored = 0;
        let mut best: Option<Split> = None;
        for pos in 0..n_features {
            if scored == budget {
                break;
            }
            if subsample {
                let pick = rng.random_range(pos..n_features);
                slots.swap(pos, pick);
            }
            let f = slots[pos];
            let col = x.column(f);
            order.clear();
            order.extend(idx.iter().map(|&i| (col[i], y[i])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            if order[0].0 == order[n - 1].0 {
                continue;
            }
            scored += 1;
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += order[k].1;
                let n_left = k + 1;
                let n_right = n - n_left;
                if n_left < min_leaf {
                    continue;
                }
                if n_right < min_leaf {
                    break;
                }
                let (lo, hi) = (order[k].0, order[k + 1].0);
                if lo == hi {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / (n_left as f64 + params.lambda)
                    + right_sum * right_sum / (n_right as f64 + params.lambda)
                    - parent_score;
                let better = match best {
                    None => gain > 0.0,
                    Some(b) => gain > b.gain || (gain == b.gain && f < b.feature),
                };
                if better {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if !(threshold >= lo && threshold < hi) {
                        threshold = lo;
                    }
                    best = Some(Split { feature: f, threshold, gain });
                }
            }
        }

        let Some(split) = best else { continue };
        let col = x.column(split.feature);
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| col[i] <= split.threshold);
        let left_sum: f64 = left_idx.iter().map(|&i| y[i]).sum();
        let right_sum: f64 = right_idx.iter().map(|&i| y[i]).sum();
        let l = tree.push_node(leaf_value(left_sum, left_idx.len(), params.lambda));
        let r = tree.push_node(leaf_value(right_sum, right_idx.len(), params.lambda));
        tree.feature[node] = split.feature as i32;
        tree.threshold[node] = split.threshold;
        tree.left[node] = l as u32;
        tree.right[node] = r as u32;
        stack.push((r, right_idx, depth + 1));
        stack.push((l, left_idx, depth + 1));
    }
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows.iter().map(Vec::as_slice), rows[0].len())
    }

    #[test]
    fn memorizes_distinct_points() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![(i * 7 % 50) as f64, (i % 3) as f64]).collect();
        let y: Vec<f64> = (0..50).map(|i| ((i * i) % 17) as f64 + 0.5).collect();
        let x = matrix(&rows);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = fit_tree(&x, &y, (0..50).collect(), &TreeParams::default(), &mut rng);
        for (row, target) in rows.iter().zip(&y) {
            assert_eq!(tree.predict(row), *target);
        }
        tree.validate(2).unwrap();
    }

    #[test]
    fn two_way_tie_prefers_lower_slot_then_lower_threshold() {
        // Slots 0 and 1 are identical, so every split on slot 1 ties with slot 0.
        // On slot 0, thresholds 1.5 and 2.5 give the same reduction.
        let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let y = vec![0.0, 1.0, 2.0];
        let x = matrix(&rows);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = fit_tree(&x, &y, vec![0, 1, 2], &TreeParams { max_depth: Some(1), ..Default::default() }, &mut rng);
        assert_eq!(tree.feature[0], 0);
        assert_eq!(tree.threshold[0], 1.5);
    }

    #[test]
    fn depth_and_leaf_limits() {
        let rows: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let x = matrix(&rows);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let shallow =
            fit_tree(&x, &y, (0..16).collect(), &TreeParams { max_depth: Some(2), ..Default::default() }, &mut rng);
        assert_eq!(shallow.depth(), 2);
        assert_eq!(shallow.n_leaves(), 4);
        let coarse =
            fit_tree(&x, &y, (0..16).collect(), &TreeParams { min_samples_leaf: 8, ..Default::default() }, &mut rng);
        assert_eq!(coarse.n_leaves(), 2);
    }

    #[test]
    fn constant_targets_make_a_leaf() {
        let x = matrix(&[vec![1.0], vec![2.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = fit_tree(&x, &[3.0, 3.0], vec![0, 1], &TreeParams::default(), &mut rng);
        assert_eq!(tree.n_nodes(), 1);
        assert_eq!(tree.predict(&[10.0]), 3.0);
    }

    #[test]
    fn leaf_values_shrink_with_lambda() {
        let x = matrix(&[vec![1.0], vec![1.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = fit_tree(&x, &[2.0, 4.0], vec![0, 1], &TreeParams { lambda: 1.0, ..Default::default() }, &mut rng);
        assert_eq!(tree.predict(&[1.0]), 2.0);
    }
}
