// Generate a synthetic corpus with the four latency archetypes and write it
// in the file formats the CLI reads.
//
// ```text
// cargo run --example synth_corpus -- /tmp/corpus
// ```

use doptune::plan::write_plans;
use doptune::synth::{generate_corpus, ArchetypeKind, CorpusEntry, CorpusSpec};
use doptune::workload::{write_latency_csv, DEFAULT_DOP_SET};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let spec = CorpusSpec::new("demo", ArchetypeKind::ALL.iter().map(|k| CorpusEntry::preset(*k, 2, 3)).collect())
        .with_sigma(0.02);
    let corpus = generate_corpus(&spec, &DEFAULT_DOP_SET, 1)?;

    print!("{:<6} {:<15}", "tmpl", "kind");
    for d in DEFAULT_DOP_SET {
        print!("{d:>8}");
    }
    println!();
    for t in &corpus.templates {
        print!("{:<6} {:<15}", t.template_id, format!("{:?}", t.kind));
        for d in DEFAULT_DOP_SET {
            print!("{:>8.0}", t.curve.latency(d)?);
        }
        println!();
    }
    println!("{} plans, {} latency rows", corpus.workload.plans().len(), corpus.workload.records().len());

    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("plans.ndjson"), write_plans(corpus.workload.plans()))?;
        std::fs::write(dir.join("latencies.csv"), write_latency_csv(&corpus.workload.records())?)?;
        std::fs::write(dir.join("templates.json"), serde_json::to_string_pretty(&corpus.templates)?)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
