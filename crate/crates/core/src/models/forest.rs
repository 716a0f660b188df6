//! Bagged regression trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree, Matrix, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Fraction of slots considered at each split.
    pub max_features: f64,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_depth: None, min_samples_leaf: 1, max_features: 1.0 / 3.0, bootstrap: true }
    }
}

impl ForestParams {
    pub fn features_per_split(&self, n_features: usize) -> usize {
        ((n_features as f64 * self.max_features).ceil() as usize).clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Arithmetic mean of the member trees.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }
}

/// Random stream for tree `index`. Streams are independent of the tree count,
/// so growing a forest leaves its earlier members unchanged.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn fit_forest(x: &Matrix, y: &[f64], params: &ForestParams, seed: u64) -> Forest {
    let n = x.n_rows();
    let per_split = params.features_per_split(x.n_cols());
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: if per_split < x.n_cols() { Some(per_split) } else { None },
        lambda: 0.0,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let samples: Vec<usize> =
                if params.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
            fit_tree(x, y, samples, &tree_params, &mut rng)
        })
        .collect();
    Forest { trees }
}
