// The four generalization levels on synthetic data: unseen plans of known
// templates, unseen templates, a new data scale, and a new schema.
//
// ```text
// cargo run --release --example generalization_levels
// ```

use doptune::harness::{run_experiment, ExperimentSettings, SplitLevel, SplitSpec};
use doptune::models::{ModelKind, ModelSpec};
use doptune::synth::{generate_corpus, ArchetypeKind, CorpusEntry, CorpusSpec};
use doptune::workload::{Workload, DEFAULT_DOP_SET};

fn corpus(id: &str, scale: f64, template_seed: u64, seed: u64) -> Workload {
    let entries = ArchetypeKind::ALL.iter().map(|k| CorpusEntry::preset(*k, 6, 4)).collect();
    let spec = CorpusSpec::new(id, entries).with_scale(scale).with_template_seed(template_seed);
    generate_corpus(&spec, &DEFAULT_DOP_SET, seed).unwrap().workload
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sf1 = corpus("sf1", 1.0, 10, 1);
    let sf10 = corpus("sf10", 10.0, 10, 2);
    let other = corpus("other", 1.0, 99, 3);
    let pair = |a: &str, b: &str| (a.to_string(), b.to_string());

    let runs = [
        ("G1", sf1.clone(), SplitSpec::k_fold(SplitLevel::G1, 5, 1)),
        ("G2", sf1.clone(), SplitSpec::k_fold(SplitLevel::G2, 5, 1)),
        (
            "G3",
            Workload::merge(&[sf1.clone(), sf10])?,
            SplitSpec::corpus_pairs(SplitLevel::G3, vec![pair("sf1", "sf10"), pair("sf10", "sf1")]),
        ),
        (
            "G4",
            Workload::merge(&[sf1, other])?,
            SplitSpec::corpus_pairs(SplitLevel::G4, vec![pair("sf1", "other"), pair("other", "sf1")]),
        ),
    ];
    let settings = ExperimentSettings::new(ModelSpec::new(ModelKind::RandomForest).with_seed(1));
    println!("{:<4} {:>6} {:>12} {:>12} {:>14}", "lvl", "folds", "test MAE", "RPE median", "realized/opt");
    for (name, workload, split) in runs {
        let report = run_experiment(&workload, &split, &settings)?.report;
        let ratio = report.folds.iter().map(|f| f.test_metrics.realized_tq / f.test_metrics.oracle_tq).sum::<f64>()
            / report.folds.len() as f64;
        println!(
            "{name:<4} {:>6} {:>12.1} {:>12.3} {:>14.3}",
            report.folds.len(),
            report.mean_test_mae,
            report.mean_test_rpe_median,
            ratio
        );
    }
    Ok(())
}
