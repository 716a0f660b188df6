//! Gradient-boosted regression trees for squared loss.
//!
//! With squared loss every hessian is 1, so the Newton step of each round is
//! a tree fit to the current residuals with leaf values `sum / (n + lambda)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree, Matrix, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostingParams {
    pub n_rounds: usize,
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
    pub lambda: f64,
    pub min_samples_leaf: usize,
    /// `None` starts from the target mean.
    pub base_score: Option<f64>,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            n_rounds: 100,
            max_depth: Some(6),
            learning_rate: 0.1,
            lambda: 1.0,
            min_samples_leaf: 1,
            base_score: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl Boosted {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| self.learning_rate * t.predict(x)).sum::<f64>()
    }
}

pub struct BoostingFit {
    pub model: Boosted,
    /// Training MSE after each round.
    pub mse_trace: Vec<f64>,
}

pub fn fit_boosting(x: &Matrix, y: &[f64], params: &BoostingParams) -> BoostingFit {
    let n = x.n_rows();
    let base_score = params.base_score.unwrap_or_else(|| y.iter().sum::<f64>() / n as f64);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: None,
        lambda: params.lambda,
    };
    // Unused: no slot subsampling.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut predictions = vec![base_score; n];
    let mut residuals = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut mse_trace = Vec::with_capacity(params.n_rounds);
    let row = |i: usize| (0..x.n_cols()).map(|j| x.get(i, j)).collect::<Vec<f64>>();
    let rows: Vec<Vec<f64>> = (0..n).map(row).collect();

    for _ in 0..params.n_rounds {
        for i in 0..n {
            residuals[i] = y[i] - predictions[i];
        }
        let tree = fit_tree(x, &residuals, (0..n).collect(), &tree_params, &mut rng);
        for (p, r) in predictions.iter_mut().zip(&rows) {
            *p += params.learning_rate * tree.predict(r);
        }
        trees.push(tree);
        let mse = y.iter().zip(&predictions).map(|(t, p)| (t - p) * (t - p)).sum::<f64>() / n as f64;
        mse_trace.push(mse);
    }

    BoostingFit { model: Boosted { base_score, learning_rate: params.learning_rate, trees }, mse_trace }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prediction_is_base_plus_shrunk_trees() {
        let model =
            Boosted { base_score: 5.0, learning_rate: 0.5, trees: vec![Tree::constant(2.0), Tree::constant(-4.0)] };
        assert_eq!(model.predict(&[0.0]), 5.0 + 1.0 - 2.0);
    }

    #[test]
    fn training_error_goes_down() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| ((i as f64) / 3.0).sin() * 10.0).collect();
        let x = Matrix::from_rows(rows.iter().map(Vec::as_slice), 1);
        let fit = fit_boosting(&x, &y, &BoostingParams { n_rounds: 20, ..Default::default() });
        assert_eq!(fit.model.trees.len(), 20);
        assert!(fit.mse_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.mse_trace[19] < fit.mse_trace[0]);
    }
}
