// Train the three model families on one synthetic corpus and compare
// training error, then check that a saved model predicts identically.
//
// ```text
// cargo run --release --example train_models
// ```

use doptune::features::{attach_dop, build_registry, featurize, ChannelSet};
use doptune::models::{load_model_for, save_model, train, Dataset, ModelKind, ModelSpec, TargetSpace};
use doptune::synth::{generate_corpus, ArchetypeKind, CorpusEntry, CorpusSpec};
use doptune::workload::DEFAULT_DOP_SET;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = CorpusSpec::new("demo", ArchetypeKind::ALL.iter().map(|k| CorpusEntry::preset(*k, 4, 4)).collect());
    let corpus = generate_corpus(&spec, &DEFAULT_DOP_SET, 3)?;
    let workload = &corpus.workload;
    let registry = build_registry(workload.plans(), ChannelSet::default())?;
    let (points, _) = workload.training_points(&registry);
    let data = Dataset::new(points, workload.dop_set().to_vec())?;
    println!("{} points, dimension {}", data.len(), registry.dimension());

    let specs = [
        ModelSpec::new(ModelKind::ElasticNet),
        ModelSpec::new(ModelKind::ElasticNet).with_target_space(TargetSpace::Log),
        ModelSpec::new(ModelKind::RandomForest).with_seed(1),
        ModelSpec::new(ModelKind::GradientBoosting),
    ];
    for spec in &specs {
        let model = train(spec, &data)?;
        let s = &model.training_summary;
        println!(
            "{:<18} {:?}  training MAE {:>9.2} ms  members {}",
            spec.kind.to_string(),
            spec.target_space,
            s.training_mae,
            s.members
        );

        let bytes = save_model(&model);
        let loaded = load_model_for(&bytes, registry.fingerprint())?;
        let plan = &workload.plans()[0];
        let x = attach_dop(&featurize(plan, &registry).vector, 32)?;
        assert_eq!(model.predict(&x)?.to_bits(), loaded.predict(&x)?.to_bits());
    }
    Ok(())
}
