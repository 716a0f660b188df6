// Pick a DOP per query and one shared DOP for the workload, and compare
// both with the measured optimum.
//
// ```text
// cargo run --release --example select_dop
// ```

use doptune::features::{build_registry, featurize, ChannelSet};
use doptune::harness::{split, SplitLevel, SplitSpec};
use doptune::models::{train, Dataset, ModelKind, ModelSpec};
use doptune::selection::{argmin_dop, select_per_query, select_workload};
use doptune::synth::{generate_corpus, ArchetypeKind, CorpusEntry, CorpusSpec};
use doptune::workload::DEFAULT_DOP_SET;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = CorpusSpec::new("demo", ArchetypeKind::ALL.iter().map(|k| CorpusEntry::preset(*k, 5, 4)).collect());
    let corpus = generate_corpus(&spec, &DEFAULT_DOP_SET, 5)?;
    let fold = split(&corpus.workload, &SplitSpec::k_fold(SplitLevel::G1, 5, 5))?.remove(0);

    let registry = build_registry(fold.train.plans(), ChannelSet::default())?;
    let data = Dataset::new(fold.train.training_points(&registry).0, DEFAULT_DOP_SET.to_vec())?;
    let model = train(&ModelSpec::new(ModelKind::RandomForest).with_seed(5), &data)?;

    let test = &fold.test;
    let features: Vec<(String, _)> =
        test.plans().iter().map(|p| (p.plan_id().to_string(), featurize(p, &registry).vector)).collect();
    let (mut chosen_total, mut best_total) = (0.0, 0.0);
    println!("{:<18} {:>6} {:>6} {:>10} {:>10}", "plan", "pick", "best", "ms@pick", "ms@best");
    for (id, x) in &features {
        let rec = select_per_query(&model, id, x, &DEFAULT_DOP_SET)?;
        let actual = test.latency_row(id).unwrap();
        let best = argmin_dop(actual.iter().map(|(d, v)| (*d, *v))).unwrap();
        chosen_total += actual[&rec.chosen_dop];
        best_total += actual[&best];
        println!("{id:<18} {:>6} {best:>6} {:>10.1} {:>10.1}", rec.chosen_dop, actual[&rec.chosen_dop], actual[&best]);
    }

    let shared = select_workload(&model, &features, &DEFAULT_DOP_SET, "test-fold")?;
    let shared_total: f64 = features.iter().map(|(id, _)| test.latency(id, shared.chosen_dop).unwrap()).sum();
    println!("\nper-query DOPs: {chosen_total:.0} ms total (optimum {best_total:.0} ms)");
    println!("workload DOP {}: {shared_total:.0} ms total", shared.chosen_dop);
    Ok(())
}
