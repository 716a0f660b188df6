//! Train/test splitting for the four generalization levels and
//! cross-validated experiment runs.
//!
//! | level | grouping                                   |
//! |-------|--------------------------------------------|
//! | G1    | plans, k-fold                              |
//! | G2    | templates, k-fold                          |
//! | G3    | whole corpora, same templates, other scale |
//! | G4    | whole corpora, other schema                |
//!
//! G3 and G4 differ only in which corpora are paired; both train on one
//! corpus and test on another.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{build_registry, featurize, ChannelSet, FeatureError, FeatureRegistry};
use crate::folds::assign_folds;
use crate::metrics::{LatencyTable, MetricsError, MetricsReport};
use crate::models::{save_model, train, Dataset, Model, ModelError, ModelSpec};
use crate::plan::{parse_plans, PlanError, QueryPlan};
use crate::selection::{argmin_dop, select_workload_rows, SelectionError};
use crate::workload::{read_latency_csv, validate_dop_set, Workload, WorkloadError, DEFAULT_DOP_SET};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("plan {0} has no template id")]
    MissingTemplateIds(String),
    #[error("plan {0} has no corpus id")]
    MissingCorpusIds(String),
    #[error("{templates} templates cannot fill {folds} folds")]
    TooFewTemplates { templates: usize, folds: usize },
    #[error("{plans} plans cannot fill {folds} folds")]
    TooFewPlans { plans: usize, folds: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("unknown corpus {0}")]
    UnknownCorpus(String),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("plan error: {0}")]
    Plan(#[from] PlanError),
    #[error("workload error: {0}")]
    Workload(#[from] WorkloadError),
    #[error("feature error: {0}")]
    Feature(#[from] FeatureError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("metrics error: {0}")]
    Metrics(#[from] MetricsError),
    #[error("selection error: {0}")]
    Selection(#[from] SelectionError),
}

fn io_err(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io { path: path.display().to_string(), message: e.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitLevel {
    G1,
    G2,
    G3,
    G4,
}

impl fmt::Display for SplitLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for SplitLevel {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "G1" | "1" => Ok(SplitLevel::G1),
            "G2" | "2" => Ok(SplitLevel::G2),
            "G3" | "3" => Ok(SplitLevel::G3),
            "G4" | "4" => Ok(SplitLevel::G4),
            other => Err(HarnessError::Config(format!("unknown level {other:?}"))),
        }
    }
}

fn default_folds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub level: SplitLevel,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    /// `(train_corpus, test_corpus)` pairs for G3 and G4.
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
}

impl SplitSpec {
    pub fn k_fold(level: SplitLevel, folds: usize, seed: u64) -> Self {
        SplitSpec { level, folds, seed, pairs: Vec::new() }
    }

    pub fn corpus_pairs(level: SplitLevel, pairs: Vec<(String, String)>) -> Self {
        SplitSpec { level, folds: pairs.len(), seed: 0, pairs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub index: usize,
    /// Names of the held-out groups (plans, templates or the test corpus).
    pub test_groups: Vec<String>,
    pub train: Workload,
    pub test: Workload,
}

fn template_of(plan: &QueryPlan) -> Result<&str, HarnessError> {
    plan.template_id().ok_or_else(|| HarnessError::MissingTemplateIds(plan.plan_id().to_string()))
}

fn corpus_of(plan: &QueryPlan) -> Result<&str, HarnessError> {
    plan.corpus_id().ok_or_else(|| HarnessError::MissingCorpusIds(plan.plan_id().to_string()))
}

fn k_fold(workload: &Workload, spec: &SplitSpec, group: impl Fn(&QueryPlan) -> &str) -> Vec<Fold> {
    let assignment = assign_folds(workload.plans().iter().map(&group), spec.folds, spec.seed);
    (0..spec.folds)
        .map(|f| Fold {
            index: f,
            test_groups: assignment.iter().filter(|(_, v)| **v == f).map(|(g, _)| g.clone()).collect(),
            train: workload.filter(|p| assignment[group(p)] != f),
            test: workload.filter(|p| assignment[group(p)] == f),
        })
        .collect()
}

/// Splits a workload into folds. Every plan's whole latency row lands on
/// one side. Deterministic under `spec.seed`.
pub fn split(workload: &Workload, spec: &SplitSpec) -> Result<Vec<Fold>, HarnessError> {
    match spec.level {
        SplitLevel::G1 | SplitLevel::G2 => {
            if spec.folds < 2 {
                return Err(HarnessError::InvalidSplit(format!("k-fold needs at least 2 folds, got {}", spec.folds)));
            }
            if spec.level == SplitLevel::G1 {
                let plans = workload.plans().len();
                if plans < spec.folds {
                    return Err(HarnessError::TooFewPlans { plans, folds: spec.folds });
                }
                Ok(k_fold(workload, spec, |p| p.plan_id()))
            } else {
                let mut templates = BTreeSet::new();
                for plan in workload.plans() {
                    templates.insert(template_of(plan)?);
                }
                if templates.len() < spec.folds {
                    return Err(HarnessError::TooFewTemplates { templates: templates.len(), folds: spec.folds });
                }
                Ok(k_fold(workload, spec, |p| p.template_id().expect("checked above")))
            }
        }
        SplitLevel::G3 | SplitLevel::G4 => {
            if spec.pairs.is_empty() {
                return Err(HarnessError::InvalidSplit(format!("{} needs at least one corpus pair", spec.level)));
            }
            let mut corpora = BTreeSet::new();
            for plan in workload.plans() {
                corpora.insert(corpus_of(plan)?);
            }
            let mut folds = Vec::new();
            for (index, (train_corpus, test_corpus)) in spec.pairs.iter().enumerate() {
                for c in [train_corpus, test_corpus] {
                    if !corpora.contains(c.as_str()) {
                        return Err(HarnessError::UnknownCorpus(c.clone()));
                    }
                }
                if train_corpus == test_corpus {
                    return Err(HarnessError::InvalidSplit(format!("corpus {train_corpus} is on both sides")));
                }
                folds.push(Fold {
                    index,
                    test_groups: vec![test_corpus.clone()],
                    train: workload.filter(|p| p.corpus_id() == Some(train_corpus.as_str())),
                    test: workload.filter(|p| p.corpus_id() == Some(test_corpus.as_str())),
                });
            }
            Ok(folds)
        }
    }
}

/// Checks the no-leakage rule of `level` on one fold.
pub fn check_fold(level: SplitLevel, fold: &Fold) -> Result<(), HarnessError> {
    let ids = |w: &Workload, f: fn(&QueryPlan) -> Option<&str>| -> BTreeSet<String> {
        w.plans().iter().filter_map(|p| f(p).map(str::to_string)).collect()
    };
    let train_plans = ids(&fold.train, |p| Some(p.plan_id()));
    let test_plans = ids(&fold.test, |p| Some(p.plan_id()));
    if let Some(p) = train_plans.intersection(&test_plans).next() {
        return Err(HarnessError::InvalidSplit(format!("plan {p} is on both sides")));
    }
    let shared = match level {
        SplitLevel::G1 => None,
        SplitLevel::G2 => ids(&fold.train, QueryPlan::template_id)
            .intersection(&ids(&fold.test, QueryPlan::template_id))
            .next()
            .map(|t| format!("template {t}")),
        SplitLevel::G3 | SplitLevel::G4 => ids(&fold.train, QueryPlan::corpus_id)
            .intersection(&ids(&fold.test, QueryPlan::corpus_id))
            .next()
            .map(|c| format!("corpus {c}")),
    };
    match shared {
        Some(what) => Err(HarnessError::InvalidSplit(format!("{what} is on both sides"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub level: SplitLevel,
    pub folds: usize,
    pub seed: u64,
    pub pairs: Vec<(String, String)>,
    pub model: ModelSpec,
    pub channels: ChannelSet,
    pub log_transform: bool,
    pub dop_set: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_groups: Vec<String>,
    pub n_train_plans: usize,
    pub n_test_plans: usize,
    pub dimension: usize,
    pub registry_fingerprint: String,
    pub train_mae: f64,
    pub test_mae: f64,
    pub train_metrics: MetricsReport,
    pub test_metrics: MetricsReport,
    /// Per-query chosen DOPs on the test side, counted by DOP.
    pub chosen_dop_histogram: BTreeMap<u32, usize>,
    /// The single DOP chosen for the whole test side.
    pub workload_dop: u32,
    /// Distinct test-side composite keys missing from the training registry.
    pub unknown_keys: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    pub folds: Vec<FoldReport>,
    pub mean_train_mae: f64,
    pub mean_test_mae: f64,
    pub mean_test_rpe_median: f64,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// One row per fold: fold id, sizes, train and test MAE, then the test metrics.
    pub fn folds_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> =
            ["fold", "n_train_plans", "n_test_plans", "dimension", "train_mae", "workload_dop", "unknown_keys"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        header.extend(MetricsReport::csv_header().into_iter().map(|c| format!("test_{c}")));
        writer.write_record(&header).expect("in-memory csv");
        for f in &self.folds {
            let mut row = vec![
                f.fold.to_string(),
                f.n_train_plans.to_string(),
                f.n_test_plans.to_string(),
                f.dimension.to_string(),
                f.train_mae.to_string(),
                f.workload_dop.to_string(),
                f.unknown_keys.len().to_string(),
            ];
            row.extend(f.test_metrics.csv_values());
            writer.write_record(&row).expect("in-memory csv");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8")
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    /// The model trained in each fold, in fold order.
    pub models: Vec<Model>,
}

impl ExperimentOutcome {
    /// Writes `report.json`, `folds.csv` and `fold_<i>.model.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: String, bytes: &[u8]| -> Result<(), HarnessError> {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
            written.push(path);
            Ok(())
        };
        put("report.json".into(), self.report.to_json().as_bytes())?;
        put("folds.csv".into(), self.report.folds_csv().as_bytes())?;
        for (i, model) in self.models.iter().enumerate() {
            put(format!("fold_{i}.model.json"), &save_model(model))?;
        }
        Ok(written)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub model: ModelSpec,
    pub channels: ChannelSet,
    pub log_transform: bool,
}

impl ExperimentSettings {
    pub fn new(model: ModelSpec) -> Self {
        ExperimentSettings { model, channels: ChannelSet::default(), log_transform: false }
    }

    pub fn with_channels(mut self, channels: ChannelSet) -> Self {
        self.channels = channels;
        self
    }
}

fn prediction_table(
    model: &Model,
    registry: &FeatureRegistry,
    workload: &Workload,
) -> Result<LatencyTable, HarnessError> {
    let (points, _) = workload.training_points(registry);
    let mut table = LatencyTable::new(workload.dop_set());
    for p in &points {
        table.insert(&p.plan_id, p.dop, p.latency_ms, model.predict(&p.features)?)?;
    }
    Ok(table)
}

fn run_fold(fold: &Fold, settings: &ExperimentSettings) -> Result<(FoldReport, Model), HarnessError> {
    let registry = build_registry(fold.train.plans(), settings.channels)?.with_log_transform(settings.log_transform);
    let (points, _) = fold.train.training_points(&registry);
    let data = Dataset::new(points, fold.train.dop_set().to_vec())?;
    let model = train(&settings.model, &data)?;

    let train_table = prediction_table(&model, &registry, &fold.train)?;
    let test_table = prediction_table(&model, &registry, &fold.test)?;
    let train_metrics = MetricsReport::compute(&train_table)?;
    let test_metrics = MetricsReport::compute(&test_table)?;

    let mut histogram = BTreeMap::new();
    let mut rows = Vec::new();
    for plan_id in test_table.plan_ids() {
        let row = test_table.predicted_row(plan_id).expect("plan is in the table");
        let chosen = argmin_dop(row.iter().map(|(d, v)| (*d, *v))).expect("DOP set is non-empty");
        *histogram.entry(chosen).or_insert(0) += 1;
        rows.push(row);
    }
    let workload_dop = select_workload_rows(&rows, "test")?.chosen_dop;

    let mut unknown = BTreeSet::new();
    for plan in fold.test.plans() {
        if featurize(plan, &registry).unknown_keys > 0 {
            for node in plan.nodes() {
                let key = node.composite_key();
                if registry.slot_of(&key).is_none() {
                    unknown.insert(key.to_string());
                }
            }
        }
    }

    let report = FoldReport {
        fold: fold.index,
        test_groups: fold.test_groups.clone(),
        n_train_plans: fold.train.plans().len(),
        n_test_plans: fold.test.plans().len(),
        dimension: registry.dimension(),
        registry_fingerprint: registry.fingerprint().to_string(),
        train_mae: train_metrics.mae,
        test_mae: test_metrics.mae,
        train_metrics,
        test_metrics,
        chosen_dop_histogram: histogram,
        workload_dop,
        unknown_keys: unknown.into_iter().collect(),
    };
    Ok((report, model))
}

/// Runs every fold: registry from the training plans only, train, then
/// score both sides. Folds run concurrently; the output does not depend on
/// scheduling.
pub fn run_experiment(
    workload: &Workload,
    split_spec: &SplitSpec,
    settings: &ExperimentSettings,
) -> Result<ExperimentOutcome, HarnessError> {
    let folds = split(workload, split_spec)?;
    for fold in &folds {
        check_fold(split_spec.level, fold)?;
        if fold.train.plans().is_empty() || fold.test.plans().is_empty() {
            return Err(HarnessError::InvalidSplit(format!("fold {} has an empty side", fold.index)));
        }
    }
    let results: Vec<(FoldReport, Model)> =
        folds.par_iter().map(|f| run_fold(f, settings)).collect::<Result<_, _>>()?;
    let (reports, models): (Vec<FoldReport>, Vec<Model>) = results.into_iter().unzip();

    let n = reports.len() as f64;
    let report = ExperimentReport {
        config: ConfigEcho {
            level: split_spec.level,
            folds: reports.len(),
            seed: split_spec.seed,
            pairs: split_spec.pairs.clone(),
            model: settings.model.clone(),
            channels: settings.channels,
            log_transform: settings.log_transform,
            dop_set: workload.dop_set().to_vec(),
        },
        mean_train_mae: reports.iter().map(|r| r.train_mae).sum::<f64>() / n,
        mean_test_mae: reports.iter().map(|r| r.test_mae).sum::<f64>() / n,
        mean_test_rpe_median: reports.iter().map(|r| r.test_metrics.rpe_median).sum::<f64>() / n,
        folds: reports,
    };
    Ok(ExperimentOutcome { report, models })
}

/// The full channel set, then each channel left out in turn.
pub fn run_ablation(
    workload: &Workload,
    split_spec: &SplitSpec,
    settings: &ExperimentSettings,
) -> Result<Vec<(String, ExperimentOutcome)>, HarnessError> {
    let mut variants = vec![("all".to_string(), settings.channels)];
    for channel in settings.channels.channels() {
        let rest = settings.channels.without(channel);
        if rest.width() > 0 {
            variants.push((format!("without_{channel}"), rest));
        }
    }
    variants
        .into_iter()
        .map(|(label, channels)| {
            let s = ExperimentSettings { channels, ..settings.clone() };
            Ok((label, run_experiment(workload, split_spec, &s)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPaths {
    pub id: String,
    /// Plan JSON (one document per plan, or NDJSON).
    pub plans: PathBuf,
    /// Latency CSV with columns plan_id, dop, latency_ms.
    pub latencies: PathBuf,
}

/// Experiment config file. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpora: Vec<CorpusPaths>,
    pub level: SplitLevel,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
    pub model: ModelSpec,
    #[serde(default)]
    pub channels: ChannelSet,
    #[serde(default)]
    pub log_transform: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dops")]
    pub dop_set: Vec<u32>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Also run the leave-one-channel-out variants.
    #[serde(default)]
    pub ablation: bool,
}

fn default_dops() -> Vec<u32> {
    DEFAULT_DOP_SET.to_vec()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if config.corpora.is_empty() {
            return Err(HarnessError::Config("no corpora".into()));
        }
        validate_dop_set(&config.dop_set)?;
        config.model.validate()?;
        Ok(config)
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec { level: self.level, folds: self.folds, seed: self.seed, pairs: self.pairs.clone() }
    }

    /// The config seed drives both the fold assignment and the model.
    pub fn settings(&self) -> ExperimentSettings {
        let model = self.model.clone().with_seed(self.seed);
        ExperimentSettings { model, channels: self.channels, log_transform: self.log_transform }
    }
}

/// Reads one corpus. Plans without a corpus id get the configured one.
pub fn load_corpus(paths: &CorpusPaths, base_dir: &Path, dop_set: &[u32]) -> Result<Workload, HarnessError> {
    let plans_path = base_dir.join(&paths.plans);
    let latency_path = base_dir.join(&paths.latencies);
    let plan_bytes = fs::read(&plans_path).map_err(|e| io_err(&plans_path, e))?;
    let latency_text = fs::read_to_string(&latency_path).map_err(|e| io_err(&latency_path, e))?;
    let mut plans = parse_plans(&plan_bytes)?;
    for plan in &mut plans {
        if plan.corpus_id().is_none() {
            plan.set_corpus_id(Some(paths.id.clone()));
        }
    }
    Ok(Workload::new(plans, read_latency_csv(&latency_text)?, dop_set)?)
}

/// Loads the configured corpora and runs the experiment (and the ablation
/// variants when enabled, labelled by channel set).
pub fn run_config(
    config: &ExperimentConfig,
    base_dir: &Path,
) -> Result<Vec<(String, ExperimentOutcome)>, HarnessError> {
    let parts =
        config.corpora.iter().map(|c| load_corpus(c, base_dir, &config.dop_set)).collect::<Result<Vec<_>, _>>()?;
    let workload = Workload::merge(&parts)?;
    let settings = config.settings();
    if config.ablation {
        run_ablation(&workload, &config.split_spec(), &settings)
    } else {
        Ok(vec![("all".to_string(), run_experiment(&workload, &config.split_spec(), &settings)?)])
    }
}
