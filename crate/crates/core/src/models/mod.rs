//! Latency regressors over `(plan features, DOP)`.
//!
//! Three families are available: elastic-net linear regression, random
//! forests and gradient-boosted trees. All are trained on squared loss, in
//! either raw or log latency space, and persist to a versioned JSON format
//! with byte-stable output.

pub mod boosting;
pub mod forest;
pub mod linear;
pub mod search;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::features::{FeatureVector, TrainingPoint};
pub use boosting::{Boosted, BoostingParams};
pub use forest::{Forest, ForestParams};
pub use linear::{ElasticNetParams, LinearModel};
pub use search::{grid_search, CvReport, SpecScore};
pub use tree::{Matrix, Tree};

pub const MODEL_FORMAT: &str = "doptune-model";
pub const MODEL_VERSION_MAJOR: u32 = 1;
pub const MODEL_VERSION_MINOR: u32 = 0;
/// Upper bound on ensemble size.
pub const MAX_TREES: usize = 1000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feature vector comes from registry {got}, model was trained on {expected}")]
    FingerprintMismatch { expected: String, got: String },
    #[error("target for plan {plan} at DOP {dop} is not usable: {value}")]
    NonFiniteTarget { plan: String, dop: u32, value: f64 },
    #[error("point for plan {plan} has DOP {dop} outside the dataset DOP set")]
    DopOutsideSet { plan: String, dop: u32 },
    #[error("hyper-parameter {name}: {reason}")]
    InvalidHyperparameter { name: String, reason: String },
    #[error("{folds} folds need at least {folds} plans, dataset has {groups}")]
    TooFewPointsForFolds { folds: usize, groups: usize },
    #[error("no model specs to search")]
    NoSpecs,
    #[error("model version mismatch: {0}")]
    VersionMismatch(String),
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ElasticNet,
    RandomForest,
    GradientBoosting,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::ElasticNet => "elastic_net",
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
        })
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "elastic_net" | "en" | "lr" => Ok(ModelKind::ElasticNet),
            "random_forest" | "rf" => Ok(ModelKind::RandomForest),
            "gradient_boosting" | "gbt" | "xgb" => Ok(ModelKind::GradientBoosting),
            other => Err(ModelError::InvalidHyperparameter {
                name: "kind".into(),
                reason: format!("unknown model kind {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpace {
    #[default]
    Raw,
    Log,
}

/// Model family, hyper-parameter overrides, seed and target space.
/// Hyper-parameters not listed take the family defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub target_space: TargetSpace,
}

fn bad(name: &str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidHyperparameter { name: name.to_string(), reason: reason.into() }
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec { kind, hyperparams: BTreeMap::new(), seed: 0, target_space: TargetSpace::Raw }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.hyperparams.insert(name.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_target_space(mut self, space: TargetSpace) -> Self {
        self.target_space = space;
        self
    }

    fn allowed(&self) -> &'static [&'static str] {
        match self.kind {
            ModelKind::ElasticNet => &["alpha", "l1_ratio", "tol", "max_iter"],
            ModelKind::RandomForest => &["n_trees", "max_depth", "min_samples_leaf", "max_features", "bootstrap"],
            ModelKind::GradientBoosting => {
                &["n_rounds", "max_depth", "learning_rate", "lambda", "min_samples_leaf", "base_score"]
            }
        }
    }

    /// Checks names and ranges of every hyper-parameter.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in &self.hyperparams {
            if !self.allowed().contains(&name.as_str()) {
                return Err(bad(name, format!("not a {} hyper-parameter", self.kind)));
            }
            if !value.is_finite() {
                return Err(bad(name, "must be finite"));
            }
        }
        match self.kind {
            ModelKind::ElasticNet => self.elastic_net_params().map(|_| ()),
            ModelKind::RandomForest => self.forest_params().map(|_| ()),
            ModelKind::GradientBoosting => self.boosting_params().map(|_| ()),
        }
    }

    fn real(&self, name: &str, default: f64, ok: impl Fn(f64) -> bool, range: &str) -> Result<f64, ModelError> {
        let v = self.hyperparams.get(name).copied().unwrap_or(default);
        if ok(v) {
            Ok(v)
        } else {
            Err(bad(name, format!("{v} outside {range}")))
        }
    }

    fn count(&self, name: &str, default: usize, min: usize, max: usize) -> Result<usize, ModelError> {
        match self.hyperparams.get(name) {
            None => Ok(default),
            Some(v) if v.fract() == 0.0 && *v >= min as f64 && *v <= max as f64 => Ok(*v as usize),
            Some(v) => Err(bad(name, format!("{v} is not an integer in [{min}, {max}]"))),
        }
    }

    /// `0` (or absent when the default is unlimited) means no depth limit.
    fn depth(&self, default: Option<usize>) -> Result<Option<usize>, ModelError> {
        let d = self.count("max_depth", default.unwrap_or(0), 0, 10_000)?;
        Ok(if d == 0 { None } else { Some(d) })
    }

    pub fn elastic_net_params(&self) -> Result<ElasticNetParams, ModelError> {
        let d = ElasticNetParams::default();
        Ok(ElasticNetParams {
            alpha: self.real("alpha", d.alpha, |v| v >= 0.0, "[0, inf)")?,
            l1_ratio: self.real("l1_ratio", d.l1_ratio, |v| (0.0..=1.0).contains(&v), "[0, 1]")?,
            tol: self.real("tol", d.tol, |v| v > 0.0, "(0, inf)")?,
            max_iter: self.count("max_iter", d.max_iter, 1, 10_000_000)?,
        })
    }

    pub fn forest_params(&self) -> Result<ForestParams, ModelError> {
        let d = ForestParams::default();
        Ok(ForestParams {
            n_trees: self.count("n_trees", d.n_trees, 1, MAX_TREES)?,
            max_depth: self.depth(d.max_depth)?,
            min_samples_leaf: self.count("min_samples_leaf", d.min_samples_leaf, 1, usize::MAX >> 12)?,
            max_features: self.real("max_features", d.max_features, |v| v > 0.0 && v <= 1.0, "(0, 1]")?,
            bootstrap: self.count("bootstrap", usize::from(d.bootstrap), 0, 1)? == 1,
        })
    }

    pub fn boosting_params(&self) -> Result<BoostingParams, ModelError> {
        let d = BoostingParams::default();
        Ok(BoostingParams {
            n_rounds: self.count("n_rounds", d.n_rounds, 1, MAX_TREES)?,
            max_depth: self.depth(d.max_depth)?,
            learning_rate: self.real("learning_rate", d.learning_rate, |v| v > 0.0 && v <= 1.0, "(0, 1]")?,
            lambda: self.real("lambda", d.lambda, |v| v >= 0.0, "[0, inf)")?,
            min_samples_leaf: self.count("min_samples_leaf", d.min_samples_leaf, 1, usize::MAX >> 12)?,
            base_score: self.hyperparams.get("base_score").copied(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<TrainingPoint>,
    pub dop_set: Vec<u32>,
}

impl Dataset {
    pub fn new(points: Vec<TrainingPoint>, dop_set: Vec<u32>) -> Result<Self, ModelError> {
        let mut dop_set = dop_set;
        dop_set.sort_unstable();
        dop_set.dedup();
        for p in &points {
            if dop_set.binary_search(&p.dop).is_err() {
                return Err(ModelError::DopOutsideSet { plan: p.plan_id.clone(), dop: p.dop });
            }
        }
        Ok(Dataset { points, dop_set })
    }

    /// Ad-hoc dataset from raw rows; every row is its own plan measured at DOP 1.
    pub fn from_xy(x: Vec<Vec<f64>>, y: Vec<f64>) -> Self {
        let points = x
            .into_iter()
            .zip(y)
            .enumerate()
            .map(|(i, (values, latency_ms))| TrainingPoint {
                features: FeatureVector::new(values, ""),
                dop: 1,
                latency_ms,
                plan_id: format!("row{i}"),
                template_id: None,
                corpus_id: None,
            })
            .collect();
        Dataset { points, dop_set: vec![1] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> Option<usize> {
        self.points.first().map(|p| p.features.dimension())
    }

    pub fn subset(&self, keep: impl Fn(&TrainingPoint) -> bool) -> Dataset {
        Dataset { points: self.points.iter().filter(|p| keep(p)).cloned().collect(), dop_set: self.dop_set.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Learned {
    Linear(LinearModel),
    Forest(Forest),
    Boosted(Boosted),
}

impl Learned {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Learned::Linear(m) => m.predict(x),
            Learned::Forest(m) => m.predict(x),
            Learned::Boosted(m) => m.predict(x),
        }
    }

    fn validate(&self, dimension: usize) -> Result<(), String> {
        match self {
            Learned::Linear(m) => m.validate(dimension),
            Learned::Forest(f) if f.trees.is_empty() => Err("forest has no trees".into()),
            Learned::Forest(f) => f.trees.iter().try_for_each(|t| t.validate(dimension)),
            Learned::Boosted(b) if !b.base_score.is_finite() || !b.learning_rate.is_finite() => {
                Err("non-finite boosting parameters".into())
            }
            Learned::Boosted(b) => b.trees.iter().try_for_each(|t| t.validate(dimension)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub n_points: usize,
    pub training_mae: f64,
    /// Trees, boosting rounds, or coordinate-descent sweeps.
    pub members: usize,
    pub converged: bool,
    /// Objective per sweep (elastic net) or training MSE per round (boosting).
    #[serde(default)]
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub registry_fingerprint: String,
    pub dimension: usize,
    pub learned: Learned,
    pub training_summary: TrainingSummary,
}

impl Model {
    /// Wraps already-learned parameters, e.g. a hand-built linear model.
    pub fn from_parts(
        spec: ModelSpec,
        registry_fingerprint: impl Into<String>,
        dimension: usize,
        learned: Learned,
    ) -> Self {
        Model {
            spec,
            registry_fingerprint: registry_fingerprint.into(),
            dimension,
            learned,
            training_summary: TrainingSummary {
                n_points: 0,
                training_mae: 0.0,
                members: 0,
                converged: true,
                loss_trace: Vec::new(),
            },
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<f64, ModelError> {
        if x.dimension() != self.dimension {
            return Err(ModelError::DimensionMismatch { expected: self.dimension, got: x.dimension() });
        }
        if !self.registry_fingerprint.is_empty()
            && !x.registry_fingerprint.is_empty()
            && self.registry_fingerprint != x.registry_fingerprint
        {
            return Err(ModelError::FingerprintMismatch {
                expected: self.registry_fingerprint.clone(),
                got: x.registry_fingerprint.clone(),
            });
        }
        Ok(self.predict_values(&x.values))
    }

    fn predict_values(&self, values: &[f64]) -> f64 {
        let raw = self.learned.predict(values);
        match self.spec.target_space {
            TargetSpace::Raw => raw.max(0.0),
            TargetSpace::Log => raw.exp(),
        }
    }
}

pub fn predict(model: &Model, x: &FeatureVector) -> Result<f64, ModelError> {
    model.predict(x)
}

pub fn train(spec: &ModelSpec, data: &Dataset) -> Result<Model, ModelError> {
    spec.validate()?;
    let first = data.points.first().ok_or(ModelError::EmptyDataset)?;
    let dimension = first.features.dimension();
    let fingerprint = first.features.registry_fingerprint.clone();
    let mut targets = Vec::with_capacity(data.len());
    for p in &data.points {
        if p.features.dimension() != dimension {
            return Err(ModelError::DimensionMismatch { expected: dimension, got: p.features.dimension() });
        }
        let t = match spec.target_space {
            TargetSpace::Raw => p.latency_ms,
            TargetSpace::Log => p.latency_ms.ln(),
        };
        if !t.is_finite() || p.features.values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteTarget { plan: p.plan_id.clone(), dop: p.dop, value: p.latency_ms });
        }
        targets.push(t);
    }
    let x = Matrix::from_rows(data.points.iter().map(|p| p.features.values.as_slice()), dimension);

    let (learned, members, converged, loss_trace) = match spec.kind {
        ModelKind::ElasticNet => {
            let fit = linear::fit_elastic_net(&x, &targets, &spec.elastic_net_params()?);
            (Learned::Linear(fit.model), fit.sweeps, fit.converged, fit.objective_trace)
        }
        ModelKind::RandomForest => {
            let params = spec.forest_params()?;
            let forest = forest::fit_forest(&x, &targets, &params, spec.seed);
            (Learned::Forest(forest), params.n_trees, true, Vec::new())
        }
        ModelKind::GradientBoosting => {
            let params = spec.boosting_params()?;
            let fit = boosting::fit_boosting(&x, &targets, &params);
            (Learned::Boosted(fit.model), params.n_rounds, true, fit.mse_trace)
        }
    };

    let mut model = Model::from_parts(spec.clone(), fingerprint, dimension, learned);
    let abs_err: f64 =
        data.points.iter().map(|p| (model.predict_values(&p.features.values) - p.latency_ms).abs()).sum();
    model.training_summary = TrainingSummary {
        n_points: data.len(),
        training_mae: abs_err / data.len() as f64,
        members,
        converged,
        loss_trace,
    };
    Ok(model)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: String,
    #[serde(flatten)]
    model: Model,
}

pub fn save_model(model: &Model) -> Vec<u8> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: format!("{MODEL_VERSION_MAJOR}.{MODEL_VERSION_MINOR}"),
        model: model.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file).expect("models serialize");
    bytes.push(b'\n');
    bytes
}

pub fn load_model(bytes: &[u8]) -> Result<Model, ModelError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| ModelError::CorruptModel(e.to_string()))?;
    if value.get("format").and_then(Value::as_str) != Some(MODEL_FORMAT) {
        return Err(ModelError::CorruptModel("missing or unexpected format tag".into()));
    }
    let version = value
        .get("version")
        .and_then(Value::as_str)
        .ok_or_else(|| ModelError::CorruptModel("missing version".into()))?;
    let major: u32 = version
        .split('.')
        .next()
        .and_then(|m| m.parse().ok())
        .ok_or_else(|| ModelError::CorruptModel(format!("bad version {version:?}")))?;
    if major != MODEL_VERSION_MAJOR {
        return Err(ModelError::VersionMismatch(format!(
            "file has format version {version}, this build reads {MODEL_VERSION_MAJOR}.x"
        )));
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| ModelError::CorruptModel(e.to_string()))?;
    let model = file.model;
    model.spec.validate().map_err(|e| ModelError::CorruptModel(e.to_string()))?;
    model.learned.validate(model.dimension).map_err(ModelError::CorruptModel)?;
    Ok(model)
}

/// Loads a model and checks it was trained against the given registry.
pub fn load_model_for(bytes: &[u8], registry_fingerprint: &str) -> Result<Model, ModelError> {
    let model = load_model(bytes)?;
    if model.registry_fingerprint != registry_fingerprint {
        return Err(ModelError::VersionMismatch(format!(
            "model was trained on registry {}, not {registry_fingerprint}",
            model.registry_fingerprint
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nonlinear(n: usize) -> Dataset {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, ((i * 13) % 7) as f64]).collect();
        let y = x.iter().map(|r| 50.0 + (r[0] / 4.0).sin() * 20.0 + r[1] * r[1]).collect();
        Dataset::from_xy(x, y)
    }

    #[test]
    fn elastic_net_planted_line() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, ((i * 7) % 11) as f64]).collect();
        let y = x.iter().map(|r| 2.0 * r[0] + 3.0).collect();
        let spec = ModelSpec::new(ModelKind::ElasticNet).with("alpha", 0.0);
        let model = train(&spec, &Dataset::from_xy(x, y)).unwrap();
        let Learned::Linear(lin) = &model.learned else { panic!() };
        assert!((lin.coefficients()[0] - 2.0).abs() < 1e-3);
        assert!(lin.coefficients()[1].abs() < 1e-3);
        assert!((lin.raw_intercept() - 3.0).abs() < 1e-3);
    }

    #[test]
    fn single_tree_memorizes() {
        let data = nonlinear(50);
        let spec = ModelSpec::new(ModelKind::RandomForest)
            .with("n_trees", 1.0)
            .with("bootstrap", 0.0)
            .with("max_features", 1.0);
        let model = train(&spec, &data).unwrap();
        let mean_target = data.points.iter().map(|p| p.latency_ms).sum::<f64>() / 50.0;
        assert!(model.training_summary.training_mae < 1e-9 * mean_target);
        let p = &data.points[17];
        assert_eq!(model.predict(&p.features).unwrap(), p.latency_ms);
    }

    #[test]
    fn constant_linear_model() {
        let model = Model::from_parts(
            ModelSpec::new(ModelKind::ElasticNet),
            "",
            3,
            Learned::Linear(LinearModel::from_raw(vec![0.0; 3], 7.0)),
        );
        for v in [[0.0, 0.0, 1.0], [5.0, -2.0, 80.0]] {
            assert_eq!(model.predict(&FeatureVector::new(v.to_vec(), "")).unwrap(), 7.0);
        }
        assert!(matches!(
            model.predict(&FeatureVector::new(vec![1.0], "")),
            Err(ModelError::DimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn raw_predictions_clamped_and_log_space_exponentiated() {
        let neg = Model::from_parts(
            ModelSpec::new(ModelKind::ElasticNet),
            "",
            1,
            Learned::Linear(LinearModel::from_raw(vec![0.0], -3.0)),
        );
        assert_eq!(neg.predict(&FeatureVector::new(vec![1.0], "")).unwrap(), 0.0);
        let log = Model::from_parts(
            ModelSpec::new(ModelKind::ElasticNet).with_target_space(TargetSpace::Log),
            "",
            1,
            Learned::Linear(LinearModel::from_raw(vec![0.0], 2.0)),
        );
        assert_eq!(log.predict(&FeatureVector::new(vec![1.0], "")).unwrap(), 2f64.exp());

        let data = nonlinear(40);
        let spec = ModelSpec::new(ModelKind::RandomForest)
            .with("n_trees", 1.0)
            .with("bootstrap", 0.0)
            .with("max_features", 1.0)
            .with_target_space(TargetSpace::Log);
        let model = train(&spec, &data).unwrap();
        let p = &data.points[3];
        assert!((model.predict(&p.features).unwrap() - p.latency_ms).abs() < 1e-9 * p.latency_ms);
    }

    #[test]
    fn training_errors() {
        let spec = ModelSpec::new(ModelKind::RandomForest);
        assert!(matches!(train(&spec, &Dataset::from_xy(vec![], vec![])), Err(ModelError::EmptyDataset)));
        let ragged = Dataset::from_xy(vec![vec![1.0, 2.0], vec![1.0]], vec![1.0, 2.0]);
        assert!(matches!(train(&spec, &ragged), Err(ModelError::DimensionMismatch { .. })));
        let nan = Dataset::from_xy(vec![vec![1.0], vec![2.0]], vec![1.0, f64::NAN]);
        assert!(matches!(train(&spec, &nan), Err(ModelError::NonFiniteTarget { .. })));
        let log = ModelSpec::new(ModelKind::ElasticNet).with_target_space(TargetSpace::Log);
        let zero = Dataset::from_xy(vec![vec![1.0]], vec![0.0]);
        assert!(matches!(train(&log, &zero), Err(ModelError::NonFiniteTarget { .. })));
    }

    #[test]
    fn hyperparameter_validation() {
        let forest = ModelSpec::new(ModelKind::RandomForest);
        assert!(forest.clone().with("n_trees", 1000.0).validate().is_ok());
        assert!(forest.clone().with("n_trees", 1001.0).validate().is_err());
        assert!(forest.clone().with("n_trees", 2.5).validate().is_err());
        assert!(forest.clone().with("alpha", 1.0).validate().is_err());
        assert!(forest.clone().with("max_features", 0.0).validate().is_err());
        let gbt = ModelSpec::new(ModelKind::GradientBoosting);
        assert!(gbt.clone().with("n_rounds", 1001.0).validate().is_err());
        assert!(gbt.clone().with("learning_rate", 1.5).validate().is_err());
        assert_eq!(gbt.boosting_params().unwrap().max_depth, Some(6));
        assert_eq!(gbt.clone().with("max_depth", 0.0).boosting_params().unwrap().max_depth, None);
        let en = ModelSpec::new(ModelKind::ElasticNet);
        assert!(en.clone().with("l1_ratio", 1.5).validate().is_err());
        assert_eq!(en.elastic_net_params().unwrap(), ElasticNetParams::default());
        assert_eq!("rf".parse::<ModelKind>().unwrap(), ModelKind::RandomForest);
    }

    #[test]
    fn save_load_round_trip_and_errors() {
        let data = nonlinear(30);
        let spec = ModelSpec::new(ModelKind::GradientBoosting).with("n_rounds", 10.0);
        let model = train(&spec, &data).unwrap();
        let bytes = save_model(&model);
        let back = load_model(&bytes).unwrap();
        assert_eq!(back, model);
        for p in &data.points {
            assert_eq!(back.predict(&p.features).unwrap().to_bits(), model.predict(&p.features).unwrap().to_bits());
        }
        assert_eq!(save_model(&back), bytes);

        assert!(matches!(load_model(&bytes[..bytes.len() / 2]), Err(ModelError::CorruptModel(_))));
        let newer = String::from_utf8(bytes.clone()).unwrap().replacen("\"1.0\"", "\"2.0\"", 1);
        assert!(matches!(load_model(newer.as_bytes()), Err(ModelError::VersionMismatch(_))));
        assert!(matches!(load_model_for(&bytes, "deadbeef"), Err(ModelError::VersionMismatch(_))));
        assert!(load_model_for(&bytes, "").is_ok());
    }

    #[test]
    fn training_is_deterministic() {
        let data = nonlinear(60);
        let spec = ModelSpec::new(ModelKind::RandomForest).with("n_trees", 20.0).with_seed(7);
        assert_eq!(save_model(&train(&spec, &data).unwrap()), save_model(&train(&spec, &data).unwrap()));
    }
}
