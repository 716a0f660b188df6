// Featurize a hand-written plan: composite keys, node weights and the
// resulting vector, once per channel set.
//
// ```text
// cargo run --example featurize_plan
// ```

use doptune::features::{attach_dop, build_registry, featurize, node_heights, node_weights, ChannelSet};
use doptune::plan::parse_plan;

const PLAN: &str = r#"{
  "plan_id": "q17",
  "template_id": "t17",
  "root": 0,
  "nodes": [
    {"id": 0, "op": "Select", "row_batch": "row", "parallel": false,
     "est_output_bytes": 800, "est_cpu_cost": 0.1, "est_io_cost": 0, "children": [1]},
    {"id": 1, "op": "HashMatch", "row_batch": "batch", "parallel": true,
     "attrs": {"LogicalOp": "InnerJoin"},
     "est_output_bytes": 64000, "est_cpu_cost": 4.2, "est_io_cost": 0, "children": [2, 3]},
    {"id": 2, "op": "ColumnstoreIndexScan", "row_batch": "batch", "parallel": true,
     "est_output_bytes": 1200000, "est_cpu_cost": 1.5, "est_io_cost": 9.0, "children": []},
    {"id": 3, "op": "ColumnstoreIndexScan", "row_batch": "batch", "parallel": true,
     "est_output_bytes": 300000, "est_cpu_cost": 0.4, "est_io_cost": 2.5, "children": []}
  ]
}"#;

fn main() {
    let plan = parse_plan(PLAN.as_bytes()).expect("valid plan");
    let heights = node_heights(&plan);
    let weights = node_weights(&plan);
    for node in plan.nodes() {
        println!("{:>2}  h={}  weight={:>10}  {}", node.id, heights[&node.id], weights[&node.id], node.composite_key());
    }

    for channels in ["count,card,weight", "count,card,cost,weight", "count"] {
        let channels: ChannelSet = channels.parse().unwrap();
        let registry = build_registry(std::slice::from_ref(&plan), channels).unwrap();
        let f = featurize(&plan, &registry);
        let x = attach_dop(&f.vector, 16).unwrap();
        println!("\n[{channels}] dimension {} fingerprint {}", registry.dimension(), registry.fingerprint());
        for (name, value) in registry.slot_names().iter().zip(&x.values) {
            if *value != 0.0 {
                println!("  {name:<60} {value}");
            }
        }
    }
}
