//! Hyper-parameter selection by grouped k-fold cross-validation MAE.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{train, Dataset, ModelError, ModelSpec};
use crate::folds::assign_folds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecScore {
    pub spec: ModelSpec,
    pub fold_mae: Vec<f64>,
    pub mean_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    pub best_index: usize,
    pub scores: Vec<SpecScore>,
}

impl CvReport {
    pub fn best(&self) -> &ModelSpec {
        &self.scores[self.best_index].spec
    }
}

/// Scores every spec by mean validation MAE over `k` folds. All rows of a
/// plan stay in one fold. Ties go to the earlier spec.
pub fn grid_search(
    specs: &[ModelSpec],
    data: &Dataset,
    k: usize,
    seed: u64,
) -> Result<(ModelSpec, CvReport), ModelError> {
    if specs.is_empty() {
        return Err(ModelError::NoSpecs);
    }
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let folds = assign_folds(data.points.iter().map(|p| p.plan_id.as_str()), k.max(1), seed);
    if k < 2 || folds.len() < k {
        return Err(ModelError::TooFewPointsForFolds { folds: k, groups: folds.len() });
    }
    let splits: Vec<(Dataset, Dataset)> =
        (0..k).map(|f| (data.subset(|p| folds[&p.plan_id] != f), data.subset(|p| folds[&p.plan_id] == f))).collect();

    let mut scores = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut fold_mae = Vec::with_capacity(k);
        for (train_set, test_set) in &splits {
            let model = train(spec, train_set)?;
            let mut err = 0.0;
            for p in &test_set.points {
                err += (model.predict(&p.features)? - p.latency_ms).abs();
            }
            fold_mae.push(err / test_set.len() as f64);
        }
        let mean_mae = fold_mae.iter().sum::<f64>() / k as f64;
        scores.push(SpecScore { spec: spec.clone(), fold_mae, mean_mae });
    }
    let mut best_index = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.mean_mae < scores[best_index].mean_mae {
            best_index = i;
        }
    }
    let report = CvReport { folds: k, seed, best_index, scores };
    Ok((report.best().clone(), report))
}

/// Expands a parameter grid into specs (cartesian product, keys in sorted order).
pub fn expand_grid(base: &ModelSpec, grid: &BTreeMap<String, Vec<f64>>) -> Vec<ModelSpec> {
    let mut specs = vec![base.clone()];
    for (name, values) in grid {
        specs = specs.into_iter().flat_map(|s| values.iter().map(move |v| s.clone().with(name, *v))).collect();
    }
    specs
}
