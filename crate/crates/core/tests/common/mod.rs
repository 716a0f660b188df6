#![allow(dead_code)]

use doptune::plan::{NodeId, OperatorNode, ParallelMode, QueryPlan, RowBatch};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;

const OPERATORS: [&str; 7] = ["TableScan", "IndexSeek", "HashMatch", "Sort", "Filter", "NestedLoops", "ComputeScalar"];

/// Random plan tree with at most `max_depth` levels and up to three children
/// per node. Node ids are shuffled so id order differs from tree order.
/// With `integral` set, estimates are whole numbers, which keeps every sum
/// exact regardless of evaluation order.
pub fn random_plan<R: Rng>(rng: &mut R, plan_id: &str, max_depth: u32, integral: bool) -> QueryPlan {
    let mut shape: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier = vec![(0usize, 1u32)];
    while let Some((idx, depth)) = frontier.pop() {
        if depth >= max_depth || shape.len() > 60 || rng.random_bool(0.3) {
            continue;
        }
        for _ in 0..rng.random_range(1..=3) {
            shape.push(Vec::new());
            let child = shape.len() - 1;
            shape[idx].push(child);
            frontier.push((child, depth + 1));
        }
    }

    let mut ids: Vec<NodeId> = (0..shape.len() as NodeId).map(|i| i * 3 + 1).collect();
    ids.shuffle(rng);
    let nodes = shape
        .iter()
        .enumerate()
        .map(|(i, children)| {
            let rb = if rng.random_bool(0.5) { RowBatch::Row } else { RowBatch::Batch };
            let pm = if rng.random_bool(0.5) { ParallelMode::Parallel } else { ParallelMode::Serial };
            let mut node = OperatorNode::new(ids[i], OPERATORS[rng.random_range(0..OPERATORS.len())], rb, pm)
                .with_children(children.iter().map(|c| ids[*c]));
            if rng.random_bool(0.3) {
                node = node.with_attr("LogicalOp", if rng.random_bool(0.5) { "InnerJoin" } else { "Aggregate" });
            }
            let (bytes, cpu, io) = if integral {
                (
                    rng.random_range(0..1_000_000) as f64,
                    rng.random_range(0..1000) as f64,
                    rng.random_range(0..1000) as f64,
                )
            } else {
                (rng.random_range(0.0..1e6), rng.random_range(0.0..10.0), rng.random_range(0.0..10.0))
            };
            node.with_estimates(bytes, cpu, io)
        })
        .collect();
    QueryPlan::new(plan_id, None, None, ids[0], nodes).expect("generated plan is a valid tree")
}

/// Same plan with every children list shuffled.
pub fn permute_siblings<R: Rng>(plan: &QueryPlan, rng: &mut R) -> QueryPlan {
    let nodes = plan
        .nodes()
        .iter()
        .map(|n| {
            let mut n = n.clone();
            n.children.shuffle(rng);
            n
        })
        .collect();
    QueryPlan::new(plan.plan_id(), None, None, plan.root(), nodes).unwrap()
}

/// Plain recursive height, no memoization.
pub fn brute_height(plan: &QueryPlan, id: NodeId) -> u32 {
    let node = plan.node(id).unwrap();
    1 + node.children.iter().map(|c| brute_height(plan, *c)).max().unwrap_or(0)
}

pub fn brute_weight(plan: &QueryPlan, id: NodeId) -> f64 {
    let node = plan.node(id).unwrap();
    if node.children.is_empty() {
        return node.est_output_bytes;
    }
    node.children.iter().map(|c| brute_weight(plan, *c) * f64::from(brute_height(plan, *c))).sum()
}

/// Random predicted/actual grid over `dops` for `n_plans` plans.
pub fn random_rows<R: Rng>(rng: &mut R, n_plans: usize, dops: &[u32]) -> Vec<BTreeMap<u32, f64>> {
    (0..n_plans).map(|_| dops.iter().map(|d| (*d, rng.random_range(0.5..1000.0))).collect()).collect()
}
