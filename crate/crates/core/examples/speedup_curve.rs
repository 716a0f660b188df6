// Measured and predicted speedup/costup curves relative to DOP 64, one per
// archetype, written as CSV to stdout.
//
// ```text
// cargo run --release --example speedup_curve > curves.csv
// ```

use doptune::features::{build_registry, featurize, ChannelSet};
use doptune::models::{train, Dataset, ModelKind, ModelSpec};
use doptune::selection::{predicted_row, speedup_costup, write_curves_csv, CurveSource};
use doptune::synth::{generate_corpus, ArchetypeKind, CorpusEntry, CorpusSpec};
use doptune::workload::DEFAULT_DOP_SET;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = CorpusSpec::new("demo", ArchetypeKind::ALL.iter().map(|k| CorpusEntry::preset(*k, 6, 4)).collect());
    let corpus = generate_corpus(&spec, &DEFAULT_DOP_SET, 2)?;
    let workload = &corpus.workload;
    let registry = build_registry(workload.plans(), ChannelSet::default())?;
    let data = Dataset::new(workload.training_points(&registry).0, DEFAULT_DOP_SET.to_vec())?;
    let model = train(&ModelSpec::new(ModelKind::GradientBoosting), &data)?;

    let mut curves = Vec::new();
    for kind in ArchetypeKind::ALL {
        let plan =
            workload.plans().iter().find(|p| corpus.kind_of_template(p.template_id().unwrap()) == Some(kind)).unwrap();
        let actual = workload.latency_row(plan.plan_id()).unwrap();
        let predicted = predicted_row(&model, &featurize(plan, &registry).vector, &DEFAULT_DOP_SET)?;
        let label = format!("{}:{kind:?}", plan.plan_id());
        curves.push((label.clone(), speedup_costup(actual, 64, None, CurveSource::Actual)?));
        curves.push((label, speedup_costup(&predicted, 64, None, CurveSource::Predicted)?));
    }
    print!("{}", write_curves_csv(&curves));
    Ok(())
}
