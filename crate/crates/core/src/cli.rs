//! The `doptune` command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.
//! Outputs go to `--out-dir`, which defaults to `$DOPTUNE_OUT_DIR` or the
//! current directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::features::{
    build_registry, read_feature_csv, write_feature_csv, ChannelSet, FeatureRegistry, FeatureRow, TrainingPoint,
};
use crate::harness::{run_config, ExperimentConfig};
use crate::models::search::{expand_grid, grid_search};
use crate::models::{load_model_for, save_model, train, Dataset, ModelKind, ModelSpec, TargetSpace};
use crate::plan::{parse_plans, write_plans};
use crate::selection::{
    predicted_row, select_workload_rows, speedup_costup, write_curves_csv, CurveSource, DopRecommendation,
};
use crate::synth::{generate_corpus, ArchetypeKind, CorpusEntry, CorpusSpec};
use crate::workload::{parse_dop_set, read_latency_csv, write_latency_csv, LatencyRecord, Workload};

const DEFAULT_DOPS: &str = "1,2,4,8,16,20,32,40,64,80";

#[derive(Debug, Parser)]
#[command(name = "doptune", version, about = "Predict query latency across degrees of parallelism and pick DOPs")]
pub struct Cli {
    /// Directory for output files.
    #[arg(long, short = 'o', global = true, env = "DOPTUNE_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Seed for every random choice (model training, folds, synthesis).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated DOP values.
    #[arg(long, global = true, default_value = DEFAULT_DOPS)]
    pub dop_set: String,
    /// More log output (repeat for debug).
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plans -> features.csv (+ registry.json when no registry is given).
    Featurize(FeaturizeArgs),
    /// features.csv + latency CSV -> model.json.
    Train(TrainArgs),
    /// Model + plans -> predictions.csv over the DOP set.
    Predict(ModelInput),
    /// Model + plans -> recommendations.json with per-query and workload DOPs.
    Recommend(ModelInput),
    /// Predicted or measured grid -> curves.csv with speedup and costup.
    Curve(CurveArgs),
    /// Experiment config -> report.json, folds.csv and per-fold models.
    Evaluate(EvaluateArgs),
    /// Corpus spec (or built-in mix) -> plans.ndjson, latencies.csv, templates.json.
    Synth(SynthArgs),
    /// Grid-search config -> best_spec.json and cv_report.json.
    Tune(TuneArgs),
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Plan JSON (single documents or NDJSON).
    #[arg(long)]
    pub plans: PathBuf,
    /// Existing registry; when absent one is built from the plans.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Channels used when building a registry.
    #[arg(long, default_value = "count,card,weight")]
    pub channels: ChannelSet,
    /// log1p-transform card, cost and weight values.
    #[arg(long)]
    pub log_transform: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    Raw,
    Log,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub latencies: PathBuf,
    #[arg(long)]
    pub registry: PathBuf,
    /// Model spec JSON; `--kind` and `--param` override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// elastic_net, random_forest or gradient_boosting.
    #[arg(long)]
    pub kind: Option<ModelKind>,
    /// Hyper-parameter override, `name=value`. Repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    #[arg(long, value_enum)]
    pub target_space: Option<Space>,
}

#[derive(Debug, Args)]
pub struct ModelInput {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub registry: PathBuf,
    #[arg(long)]
    pub plans: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Measured latency CSV; used instead of a model when given.
    #[arg(long, conflicts_with_all = ["model", "registry", "plans"])]
    pub latencies: Option<PathBuf>,
    #[arg(long, requires_all = ["registry", "plans"])]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long)]
    pub plans: Option<PathBuf>,
    /// Baseline DOP for speedup and costup.
    #[arg(long, default_value_t = 64)]
    pub baseline_dop: u32,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Experiment config JSON.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Corpus spec JSON. Without it, every archetype is used with the counts below.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value = "synthetic")]
    pub corpus_id: String,
    #[arg(long, default_value_t = 10)]
    pub templates_per_kind: usize,
    #[arg(long, default_value_t = 5)]
    pub plans_per_template: usize,
    /// Lognormal noise sigma.
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    /// Data scale multiplier.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Search config JSON: `{"base": <spec>, "grid": {"name": [values]}, "folds": 5}`.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub latencies: PathBuf,
    #[arg(long)]
    pub registry: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub base: ModelSpec,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<f64>>,
    #[serde(default = "five")]
    pub folds: usize,
}

fn five() -> usize {
    5
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("bad value for {name}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

type Result<T> = std::result::Result<T, String>;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).map_err(|_| format!("{} is not UTF-8", path.display()))
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn err<E: std::fmt::Display>(module: &'static str) -> impl Fn(E) -> String {
    move |e| format!("{module}: {e}")
}

fn load_registry(path: &Path) -> Result<FeatureRegistry> {
    FeatureRegistry::from_json(&read_text(path)?).map_err(err("featurization"))
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(message) => {
            eprintln!("error: {message}");
            2
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    let dop_set = parse_dop_set(&cli.dop_set).map_err(err("workload"))?;
    let out = cli.out_dir.as_path();
    match &cli.command {
        Command::Featurize(a) => featurize_cmd(a, out),
        Command::Train(a) => train_cmd(a, cli.seed, &dop_set, out),
        Command::Predict(a) => predict_cmd(a, &dop_set, out),
        Command::Recommend(a) => recommend_cmd(a, &dop_set, out),
        Command::Curve(a) => curve_cmd(a, &dop_set, out),
        Command::Evaluate(a) => evaluate_cmd(a, cli.seed, out),
        Command::Synth(a) => synth_cmd(a, cli.seed.unwrap_or(0), &dop_set, out),
        Command::Tune(a) => tune_cmd(a, cli.seed, &dop_set, out),
    }
}

fn featurize_cmd(a: &FeaturizeArgs, out: &Path) -> Result<()> {
    let plans = parse_plans(&read(&a.plans)?).map_err(err("plan_model"))?;
    let registry = match &a.registry {
        Some(path) => load_registry(path)?,
        None => {
            let registry =
                build_registry(&plans, a.channels).map_err(err("featurization"))?.with_log_transform(a.log_transform);
            write(out, "registry.json", registry.to_json())?;
            registry
        }
    };
    let rows: Vec<FeatureRow> = plans.iter().map(|p| FeatureRow::from_plan(p, &registry)).collect();
    write(out, "features.csv", write_feature_csv(&registry, &rows).map_err(err("featurization"))?)?;
    Ok(())
}

fn training_dataset(features: &Path, latencies: &Path, registry: &FeatureRegistry, dop_set: &[u32]) -> Result<Dataset> {
    let rows = read_feature_csv(registry, &read_text(features)?).map_err(err("featurization"))?;
    let records = read_latency_csv(&read_text(latencies)?).map_err(err("workload"))?;
    let by_plan: BTreeMap<&str, &FeatureRow> = rows.iter().map(|r| (r.plan_id.as_str(), r)).collect();
    let mut points = Vec::with_capacity(records.len());
    for rec in &records {
        if !dop_set.contains(&rec.dop) {
            continue;
        }
        let row = by_plan
            .get(rec.plan_id.as_str())
            .ok_or_else(|| format!("workload: no features for plan {}", rec.plan_id))?;
        points.push(TrainingPoint {
            features: crate::features::attach_dop(&row.vector, rec.dop).map_err(err("featurization"))?,
            dop: rec.dop,
            latency_ms: rec.latency_ms,
            plan_id: rec.plan_id.clone(),
            template_id: row.template_id.clone(),
            corpus_id: row.corpus_id.clone(),
        });
    }
    Dataset::new(points, dop_set.to_vec()).map_err(err("models"))
}

fn train_cmd(a: &TrainArgs, seed: Option<u64>, dop_set: &[u32], out: &Path) -> Result<()> {
    let mut spec = match &a.spec {
        Some(path) => serde_json::from_str::<ModelSpec>(&read_text(path)?).map_err(err("models"))?,
        None => ModelSpec::new(a.kind.unwrap_or(ModelKind::RandomForest)),
    };
    if let Some(kind) = a.kind {
        spec.kind = kind;
    }
    for (name, value) in &a.params {
        spec = spec.with(name, *value);
    }
    if let Some(space) = a.target_space {
        spec.target_space = match space {
            Space::Raw => TargetSpace::Raw,
            Space::Log => TargetSpace::Log,
        };
    }
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let registry = load_registry(&a.registry)?;
    let data = training_dataset(&a.features, &a.latencies, &registry, dop_set)?;
    let model = train(&spec, &data).map_err(err("models"))?;
    log::info!("training MAE {}", model.training_summary.training_mae);
    write(out, "model.json", save_model(&model))?;
    Ok(())
}

fn predicted_rows(a: &ModelInput, dop_set: &[u32]) -> Result<Vec<(String, BTreeMap<u32, f64>)>> {
    let registry = load_registry(&a.registry)?;
    let model = load_model_for(&read(&a.model)?, registry.fingerprint()).map_err(err("models"))?;
    let plans = parse_plans(&read(&a.plans)?).map_err(err("plan_model"))?;
    plans
        .iter()
        .map(|p| {
            let row = FeatureRow::from_plan(p, &registry);
            Ok((p.plan_id().to_string(), predicted_row(&model, &row.vector, dop_set).map_err(err("selection"))?))
        })
        .collect()
}

fn predict_cmd(a: &ModelInput, dop_set: &[u32], out: &Path) -> Result<()> {
    let rows = predicted_rows(a, dop_set)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["plan_id", "dop", "predicted_ms"]).map_err(err("cli"))?;
    for (plan, row) in &rows {
        for (dop, ms) in row {
            writer.write_record([plan.as_str(), &dop.to_string(), &ms.to_string()]).map_err(err("cli"))?;
        }
    }
    write(out, "predictions.csv", writer.into_inner().map_err(err("cli"))?)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Recommendations {
    per_query: Vec<DopRecommendation>,
    workload: DopRecommendation,
}

fn recommend_cmd(a: &ModelInput, dop_set: &[u32], out: &Path) -> Result<()> {
    let rows = predicted_rows(a, dop_set)?;
    let per_query = rows
        .iter()
        .map(|(plan, row)| DopRecommendation::from_row(plan.clone(), row.clone()))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(err("selection"))?;
    let only_rows: Vec<BTreeMap<u32, f64>> = rows.into_iter().map(|(_, r)| r).collect();
    let workload = select_workload_rows(&only_rows, "workload").map_err(err("selection"))?;
    let mut text = serde_json::to_string_pretty(&Recommendations { per_query, workload }).map_err(err("cli"))?;
    text.push('\n');
    write(out, "recommendations.json", text)?;
    Ok(())
}

fn curve_cmd(a: &CurveArgs, dop_set: &[u32], out: &Path) -> Result<()> {
    let (rows, source) = if let Some(path) = &a.latencies {
        let records: Vec<LatencyRecord> = read_latency_csv(&read_text(path)?).map_err(err("workload"))?;
        let mut rows: BTreeMap<String, BTreeMap<u32, f64>> = BTreeMap::new();
        for r in records.into_iter().filter(|r| dop_set.contains(&r.dop)) {
            rows.entry(r.plan_id).or_default().insert(r.dop, r.latency_ms);
        }
        (rows.into_iter().collect::<Vec<_>>(), CurveSource::Actual)
    } else {
        let (Some(model), Some(registry), Some(plans)) = (&a.model, &a.registry, &a.plans) else {
            return Err("cli: curve needs --latencies or --model with --registry and --plans".into());
        };
        let input = ModelInput { model: model.clone(), registry: registry.clone(), plans: plans.clone() };
        (predicted_rows(&input, dop_set)?, CurveSource::Predicted)
    };
    let curves = rows
        .iter()
        .map(|(plan, row)| {
            Ok((plan.clone(), speedup_costup(row, a.baseline_dop, None, source).map_err(err("selection"))?))
        })
        .collect::<Result<Vec<_>>>()?;
    write(out, "curves.csv", write_curves_csv(&curves))?;
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut config = ExperimentConfig::from_json(&read_text(&a.config)?).map_err(err("harness"))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let base = a.config.parent().unwrap_or(Path::new("."));
    let dir = match &config.output_dir {
        Some(d) if out == Path::new(".") => base.join(d),
        _ => out.to_path_buf(),
    };
    let outcomes = run_config(&config, base).map_err(err("harness"))?;
    let single = outcomes.len() == 1;
    for (label, outcome) in &outcomes {
        let target = if single { dir.clone() } else { dir.join(label) };
        outcome.write_to(&target).map_err(err("harness"))?;
        log::info!("{label}: mean test MAE {}", outcome.report.mean_test_mae);
    }
    Ok(())
}

fn synth_cmd(a: &SynthArgs, seed: u64, dop_set: &[u32], out: &Path) -> Result<()> {
    let spec = match &a.spec {
        Some(path) => serde_json::from_str::<CorpusSpec>(&read_text(path)?).map_err(err("synth"))?,
        None => CorpusSpec::new(
            a.corpus_id.clone(),
            ArchetypeKind::ALL
                .iter()
                .map(|k| CorpusEntry::preset(*k, a.templates_per_kind, a.plans_per_template))
                .collect(),
        )
        .with_sigma(a.sigma)
        .with_scale(a.scale),
    };
    let corpus = generate_corpus(&spec, dop_set, seed).map_err(err("synth"))?;
    write(out, "plans.ndjson", write_plans(corpus.workload.plans()))?;
    write(out, "latencies.csv", write_latency_csv(&corpus.workload.records()).map_err(err("workload"))?)?;
    let mut templates = serde_json::to_string_pretty(&corpus.templates).map_err(err("synth"))?;
    templates.push('\n');
    write(out, "templates.json", templates)?;
    Ok(())
}

fn tune_cmd(a: &TuneArgs, seed: Option<u64>, dop_set: &[u32], out: &Path) -> Result<()> {
    let config: TuneConfig = serde_json::from_str(&read_text(&a.config)?).map_err(err("models"))?;
    let seed = seed.unwrap_or(config.base.seed);
    let base = config.base.clone().with_seed(seed);
    let specs = expand_grid(&base, &config.grid);
    let registry = load_registry(&a.registry)?;
    let data = training_dataset(&a.features, &a.latencies, &registry, dop_set)?;
    let (best, report) = grid_search(&specs, &data, config.folds, seed).map_err(err("models"))?;
    let mut best_text = serde_json::to_string_pretty(&best).map_err(err("cli"))?;
    best_text.push('\n');
    let mut report_text = serde_json::to_string_pretty(&report).map_err(err("cli"))?;
    report_text.push('\n');
    write(out, "best_spec.json", best_text)?;
    write(out, "cv_report.json", report_text)?;
    Ok(())
}

/// Loads plans and latencies into a workload (used by examples and tests).
pub fn load_workload(plans: &Path, latencies: &Path, dop_set: &[u32]) -> Result<Workload> {
    let plans = parse_plans(&read(plans)?).map_err(err("plan_model"))?;
    let records = read_latency_csv(&read_text(latencies)?).map_err(err("workload"))?;
    Workload::new(plans, records, dop_set).map_err(err("workload"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::DEFAULT_DOP_SET;

    #[test]
    fn default_dops_match() {
        assert_eq!(parse_dop_set(DEFAULT_DOPS).unwrap(), DEFAULT_DOP_SET.to_vec());
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run(["doptune", "frobnicate"]), 1);
        assert_eq!(run(["doptune", "train"]), 1);
        assert_eq!(run(["doptune", "--help"]), 0);
    }

    #[test]
    fn runtime_errors_exit_2() {
        assert_eq!(run(["doptune", "featurize", "--plans", "/nonexistent/plans.json", "-o", "/tmp"]), 2);
    }

    #[test]
    fn param_parsing() {
        assert_eq!(parse_param("alpha=0.5").unwrap(), ("alpha".to_string(), 0.5));
        assert!(parse_param("alpha").is_err());
    }
}
