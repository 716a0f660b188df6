// Leave one feature channel out at a time and compare test error.
//
// ```text
// cargo run --release --example feature_ablation
// ```

use doptune::features::ChannelSet;
use doptune::harness::{run_ablation, ExperimentSettings, SplitLevel, SplitSpec};
use doptune::models::{ModelKind, ModelSpec};
use doptune::synth::{generate_corpus, ArchetypeKind, CorpusEntry, CorpusSpec};
use doptune::workload::DEFAULT_DOP_SET;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = CorpusSpec::new("demo", ArchetypeKind::ALL.iter().map(|k| CorpusEntry::preset(*k, 6, 4)).collect());
    let workload = generate_corpus(&spec, &DEFAULT_DOP_SET, 8)?.workload;
    let settings =
        ExperimentSettings::new(ModelSpec::new(ModelKind::GradientBoosting)).with_channels(ChannelSet::all());

    println!("{:<16} {:>5} {:>10} {:>11}", "features", "dim", "test MAE", "RPE median");
    for (label, outcome) in run_ablation(&workload, &SplitSpec::k_fold(SplitLevel::G2, 4, 8), &settings)? {
        let r = &outcome.report;
        println!("{label:<16} {:>5} {:>10.1} {:>11.3}", r.folds[0].dimension, r.mean_test_mae, r.mean_test_rpe_median);
    }
    Ok(())
}
