// Grid search over forest and boosting settings by cross-validated MAE.
//
// ```text
// cargo run --release --example tune_hyperparams
// ```

use doptune::features::{build_registry, ChannelSet};
use doptune::models::search::expand_grid;
use doptune::models::{grid_search, Dataset, ModelKind, ModelSpec};
use doptune::synth::{generate_corpus, ArchetypeKind, CorpusEntry, CorpusSpec};
use doptune::workload::DEFAULT_DOP_SET;
use std::collections::BTreeMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = CorpusSpec::new("demo", ArchetypeKind::ALL.iter().map(|k| CorpusEntry::preset(*k, 4, 4)).collect());
    let workload = generate_corpus(&spec, &DEFAULT_DOP_SET, 4)?.workload;
    let registry = build_registry(workload.plans(), ChannelSet::default())?;
    let data = Dataset::new(workload.training_points(&registry).0, DEFAULT_DOP_SET.to_vec())?;

    let mut specs = expand_grid(
        &ModelSpec::new(ModelKind::RandomForest).with("n_trees", 30.0),
        &BTreeMap::from([
            ("max_features".to_string(), vec![0.2, 0.5, 1.0]),
            ("min_samples_leaf".to_string(), vec![1.0, 5.0]),
        ]),
    );
    specs.extend(expand_grid(
        &ModelSpec::new(ModelKind::GradientBoosting),
        &BTreeMap::from([("learning_rate".to_string(), vec![0.05, 0.2]), ("max_depth".to_string(), vec![3.0, 6.0])]),
    ));

    let (best, report) = grid_search(&specs, &data, 5, 4)?;
    for (i, s) in report.scores.iter().enumerate() {
        let mark = if i == report.best_index { "*" } else { " " };
        println!("{mark} {:<18} {:?}  CV MAE {:.2}", s.spec.kind.to_string(), s.spec.hyperparams, s.mean_mae);
    }
    println!("\nbest: {}", serde_json::to_string(&best)?);
    Ok(())
}
