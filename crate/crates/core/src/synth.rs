//! Synthetic workloads with known latency-vs-DOP behaviour.
//!
//! Ground truth is a closed-form curve:
//!
//! ```text
//! t(d) = serial + parallel / min(d, saturation) + contention * d
//!        + (spill_penalty if spill_dop is set and d > spill_dop)
//! ```
//!
//! multiplied by lognormal noise `exp(sigma * z)`. Four archetypes cover the
//! typical profiles: no benefit from parallelism ([`ArchetypeKind::Flat`]),
//! near-linear speedup ([`ArchetypeKind::Parallelizable`]), early saturation
//! with contention ([`ArchetypeKind::Saturating`]) and a cliff at high DOP
//! from memory spills ([`ArchetypeKind::SpillCliff`]).
//!
//! Generated plans carry the curve in their estimates: bytes on parallel
//! operators scale with the parallel work, bytes on serial operators with
//! the serial work, and each archetype draws from its own operator mix.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{NodeId, OperatorNode, ParallelMode, QueryPlan, RowBatch};
use crate::workload::{LatencyRecord, Workload};

/// Estimated bytes per millisecond of modeled work.
const BYTES_PER_MS: f64 = 1.0e5;
const MAX_NODES: usize = 48;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid DOP {0}")]
    InvalidDop(u32),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchetypeKind {
    Flat,
    Parallelizable,
    Saturating,
    SpillCliff,
}

impl ArchetypeKind {
    pub const ALL: [ArchetypeKind; 4] =
        [ArchetypeKind::Flat, ArchetypeKind::Parallelizable, ArchetypeKind::Saturating, ArchetypeKind::SpillCliff];
}

/// Parameters of one latency curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyCurve {
    pub serial_ms: f64,
    pub parallel_ms: f64,
    pub saturation_dop: u32,
    pub contention_per_dop_ms: f64,
    #[serde(default)]
    pub spill_dop: Option<u32>,
    #[serde(default)]
    pub spill_penalty_ms: f64,
}

impl LatencyCurve {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, v) in [
            ("serial_ms", self.serial_ms),
            ("parallel_ms", self.parallel_ms),
            ("contention_per_dop_ms", self.contention_per_dop_ms),
            ("spill_penalty_ms", self.spill_penalty_ms),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SynthError::InvalidSpec(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.saturation_dop < 1 {
            return Err(SynthError::InvalidSpec("saturation_dop must be at least 1".into()));
        }
        if self.serial_ms + self.parallel_ms <= 0.0 {
            return Err(SynthError::InvalidSpec("curve has no work".into()));
        }
        Ok(())
    }

    /// The closed-form curve without noise.
    pub fn latency(&self, dop: u32) -> Result<f64, SynthError> {
        if dop < 1 {
            return Err(SynthError::InvalidDop(dop));
        }
        let d = f64::from(dop);
        let effective = f64::from(dop.min(self.saturation_dop));
        let mut t = self.serial_ms + self.parallel_ms / effective + self.contention_per_dop_ms * d;
        if self.spill_dop.is_some_and(|s| dop > s) {
            t += self.spill_penalty_ms;
        }
        Ok(t)
    }

    fn scaled(&self, s: f64) -> LatencyCurve {
        LatencyCurve {
            serial_ms: self.serial_ms * s,
            parallel_ms: self.parallel_ms * s,
            contention_per_dop_ms: self.contention_per_dop_ms * s,
            spill_penalty_ms: self.spill_penalty_ms * s,
            ..*self
        }
    }
}

/// Ground-truth latency at `dop`, with multiplicative lognormal noise.
/// One standard-normal draw is taken from `rng` even when `sigma` is 0.
pub fn ground_truth_latency<R: Rng + ?Sized>(
    curve: &LatencyCurve,
    dop: u32,
    sigma: f64,
    rng: &mut R,
) -> Result<f64, SynthError> {
    let base = curve.latency(dop)?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(base * (sigma * z).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorTemplate {
    pub op: String,
    pub row_batch: RowBatch,
    pub parallel: ParallelMode,
    #[serde(default)]
    pub attrs: Vec<(String, String)>,
}

impl OperatorTemplate {
    fn new(op: &str, row_batch: RowBatch, parallel: ParallelMode, attrs: &[(&str, &str)]) -> Self {
        OperatorTemplate {
            op: op.to_string(),
            row_batch,
            parallel,
            attrs: attrs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    fn node(&self, id: NodeId) -> OperatorNode {
        let mut node = OperatorNode::new(id, self.op.clone(), self.row_batch, self.parallel);
        node.attrs = self.attrs.clone();
        node
    }
}

/// Operator mix and tree shape of an archetype's plans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanShape {
    pub depth: (u32, u32),
    pub fanout: (u32, u32),
    pub leaves: Vec<OperatorTemplate>,
    pub unary: Vec<OperatorTemplate>,
    pub binary: Vec<OperatorTemplate>,
    /// Chain placed above the generated tree, outermost first. The first
    /// entry is the serial result operator.
    pub top: Vec<OperatorTemplate>,
    /// Exchange operator repeated to encode contention.
    #[serde(default)]
    pub exchange: Option<OperatorTemplate>,
}

/// Centre values and spreads for the curves of one archetype's templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateArchetype {
    pub kind: ArchetypeKind,
    pub params: LatencyCurve,
    /// Relative spread of the serial and parallel work across templates.
    /// Contention and spill penalty move with the parallel work.
    pub spread: f64,
    /// Saturation DOPs drawn per template; empty keeps `params.saturation_dop`.
    #[serde(default)]
    pub saturation_choices: Vec<u32>,
    /// Spill DOPs drawn per template; empty keeps `params.spill_dop`.
    #[serde(default)]
    pub spill_choices: Vec<u32>,
    pub shape: PlanShape,
}

impl TemplateArchetype {
    pub fn preset(kind: ArchetypeKind) -> Self {
        use ParallelMode::{Parallel, Serial};
        use RowBatch::{Batch, Row};
        let result = OperatorTemplate::new("Select", Row, Serial, &[]);
        let gather = OperatorTemplate::new("Parallelism", Row, Parallel, &[("logical", "GatherStreams")]);
        let cs_scan = OperatorTemplate::new("ColumnstoreIndexScan", Batch, Parallel, &[]);
        let repartition = OperatorTemplate::new("Parallelism", Row, Parallel, &[("logical", "RepartitionStreams")]);
        let hash_join = OperatorTemplate::new("HashMatch", Batch, Parallel, &[("logical", "InnerJoin")]);
        let hash_agg = OperatorTemplate::new("HashMatch", Batch, Parallel, &[("logical", "Aggregate")]);
        match kind {
            ArchetypeKind::Flat => TemplateArchetype {
                kind,
                params: LatencyCurve {
                    serial_ms: 300.0,
                    parallel_ms: 0.0,
                    saturation_dop: 1,
                    contention_per_dop_ms: 0.0,
                    spill_dop: None,
                    spill_penalty_ms: 0.0,
                },
                spread: 0.6,
                saturation_choices: vec![],
                spill_choices: vec![],
                shape: PlanShape {
                    depth: (2, 4),
                    fanout: (1, 2),
                    leaves: vec![
                        OperatorTemplate::new("IndexSeek", Row, Serial, &[]),
                        OperatorTemplate::new("ClusteredIndexSeek", Row, Serial, &[]),
                    ],
                    unary: vec![
                        OperatorTemplate::new("ComputeScalar", Row, Serial, &[]),
                        OperatorTemplate::new("StreamAggregate", Row, Serial, &[("logical", "Aggregate")]),
                    ],
                    binary: vec![OperatorTemplate::new("NestedLoops", Row, Serial, &[("logical", "InnerJoin")])],
                    top: vec![result, OperatorTemplate::new("Top", Row, Serial, &[])],
                    exchange: None,
                },
            },
            ArchetypeKind::Parallelizable => TemplateArchetype {
                kind,
                params: LatencyCurve {
                    serial_ms: 20.0,
                    parallel_ms: 4000.0,
                    saturation_dop: 80,
                    contention_per_dop_ms: 0.0,
                    spill_dop: None,
                    spill_penalty_ms: 0.0,
                },
                spread: 0.6,
                saturation_choices: vec![],
                spill_choices: vec![],
                shape: PlanShape {
                    depth: (2, 5),
                    fanout: (1, 2),
                    leaves: vec![cs_scan.clone()],
                    unary: vec![OperatorTemplate::new("Filter", Batch, Parallel, &[]), hash_agg.clone()],
                    binary: vec![hash_join.clone()],
                    top: vec![result.clone(), gather.clone()],
                    exchange: None,
                },
            },
            ArchetypeKind::Saturating => TemplateArchetype {
                kind,
                params: LatencyCurve {
                    serial_ms: 60.0,
                    parallel_ms: 1500.0,
                    saturation_dop: 8,
                    contention_per_dop_ms: 2.0,
                    spill_dop: None,
                    spill_penalty_ms: 0.0,
                },
                spread: 0.6,
                saturation_choices: vec![4, 8, 16],
                spill_choices: vec![],
                shape: PlanShape {
                    depth: (2, 5),
                    fanout: (1, 2),
                    leaves: vec![OperatorTemplate::new("TableScan", Row, Parallel, &[])],
                    unary: vec![
                        OperatorTemplate::new("Sort", Row, Parallel, &[]),
                        OperatorTemplate::new("StreamAggregate", Row, Parallel, &[("logical", "Aggregate")]),
                    ],
                    binary: vec![OperatorTemplate::new("MergeJoin", Row, Parallel, &[("logical", "InnerJoin")])],
                    top: vec![result.clone(), gather.clone()],
                    exchange: Some(repartition),
                },
            },
            ArchetypeKind::SpillCliff => TemplateArchetype {
                kind,
                params: LatencyCurve {
                    serial_ms: 400.0,
                    parallel_ms: 3000.0,
                    saturation_dop: 80,
                    contention_per_dop_ms: 0.0,
                    spill_dop: Some(20),
                    spill_penalty_ms: 900.0,
                },
                spread: 0.6,
                saturation_choices: vec![],
                spill_choices: vec![20, 32, 40],
                shape: PlanShape {
                    depth: (3, 5),
                    fanout: (1, 2),
                    leaves: vec![cs_scan],
                    unary: vec![OperatorTemplate::new("WindowAggregate", Batch, Parallel, &[]), hash_agg],
                    binary: vec![hash_join],
                    // The memory-hungry sort is what spills.
                    top: vec![
                        result,
                        gather,
                        OperatorTemplate::new("Sort", Batch, Parallel, &[("MemoryGrant", "Large")]),
                    ],
                    exchange: None,
                },
            },
        }
    }

    pub fn validate(&self, dop_set: &[u32]) -> Result<(), SynthError> {
        self.params.validate()?;
        if !(self.spread >= 0.0 && self.spread < 1.0) {
            return Err(SynthError::InvalidSpec(format!("spread {} outside [0, 1)", self.spread)));
        }
        if self.saturation_choices.contains(&0) {
            return Err(SynthError::InvalidSpec("saturation choices must be at least 1".into()));
        }
        if self.kind == ArchetypeKind::SpillCliff {
            let spills: Vec<u32> = if self.spill_choices.is_empty() {
                self.params.spill_dop.into_iter().collect()
            } else {
                self.spill_choices.clone()
            };
            if spills.is_empty() {
                return Err(SynthError::InvalidSpec("spill-cliff archetype needs a spill DOP".into()));
            }
            if let Some(bad) = spills.iter().find(|s| !dop_set.contains(s)) {
                return Err(SynthError::InvalidSpec(format!("spill DOP {bad} is not in the DOP set")));
            }
        }
        let s = &self.shape;
        if s.depth.0 < 1 || s.depth.0 > s.depth.1 || s.fanout.0 < 1 || s.fanout.0 > s.fanout.1 {
            return Err(SynthError::InvalidSpec("bad depth or fanout range".into()));
        }
        if s.leaves.is_empty() || s.unary.is_empty() || s.binary.is_empty() || s.top.is_empty() {
            return Err(SynthError::InvalidSpec("operator vocabulary has an empty role".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub archetype: TemplateArchetype,
    pub n_templates: usize,
    pub n_plans_per_template: usize,
}

impl CorpusEntry {
    pub fn preset(kind: ArchetypeKind, n_templates: usize, n_plans_per_template: usize) -> Self {
        CorpusEntry { archetype: TemplateArchetype::preset(kind), n_templates, n_plans_per_template }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub corpus_id: String,
    /// Multiplies every plan's work (data scale of the corpus).
    #[serde(default = "one")]
    pub scale: f64,
    /// Lognormal noise sigma.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Seeds template structure and curves. Corpora sharing it share templates.
    #[serde(default)]
    pub template_seed: Option<u64>,
    pub entries: Vec<CorpusEntry>,
}

fn one() -> f64 {
    1.0
}

fn default_sigma() -> f64 {
    0.02
}

impl CorpusSpec {
    pub fn new(corpus_id: impl Into<String>, entries: Vec<CorpusEntry>) -> Self {
        CorpusSpec { corpus_id: corpus_id.into(), scale: 1.0, sigma: default_sigma(), template_seed: None, entries }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_template_seed(mut self, seed: u64) -> Self {
        self.template_seed = Some(seed);
        self
    }
}

/// A generated template: its id, kind and the noiseless unit-scale curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateInfo {
    pub template_id: String,
    pub kind: ArchetypeKind,
    pub curve: LatencyCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub workload: Workload,
    pub templates: Vec<TemplateInfo>,
    /// Noiseless per-plan curves (after scaling), keyed by plan id.
    pub curves: BTreeMap<String, LatencyCurve>,
}

impl SyntheticCorpus {
    pub fn kind_of_template(&self, template_id: &str) -> Option<ArchetypeKind> {
        self.templates.iter().find(|t| t.template_id == template_id).map(|t| t.kind)
    }
}

struct Skeleton {
    parent_children: Vec<Vec<usize>>,
}

fn grow_skeleton(rng: &mut ChaCha8Rng, depth: u32, fanout: (u32, u32)) -> Skeleton {
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    // (node, remaining depth below it)
    let mut frontier = vec![(0usize, depth - 1, true)];
    while let Some((node, remaining, on_spine)) = frontier.pop() {
        if remaining == 0 {
            continue;
        }
        let n_children = if children.len() + 2 >= MAX_NODES { 1 } else { rng.random_range(fanout.0..=fanout.1) };
        for c in 0..n_children {
            let id = children.len();
            children.push(Vec::new());
            children[node].push(id);
            // The first child on the spine keeps the full depth; others may stop early.
            let keep_spine = on_spine && c == 0;
            let below = if keep_spine { remaining - 1 } else { rng.random_range(0..remaining) };
            frontier.push((id, below, keep_spine));
        }
    }
    Skeleton { parent_children: children }
}

struct TemplateDraft {
    info: TemplateInfo,
    nodes: Vec<OperatorNode>,
    /// Relative byte share of every node.
    shares: Vec<f64>,
}

fn draw_template(archetype: &TemplateArchetype, template_id: String, rng: &mut ChaCha8Rng) -> TemplateDraft {
    let p = &archetype.params;
    let range = 1.0 - archetype.spread..=1.0 + archetype.spread;
    let serial_f = rng.random_range(range.clone());
    let parallel_f = rng.random_range(range);
    let mut curve = LatencyCurve {
        serial_ms: p.serial_ms * serial_f,
        parallel_ms: p.parallel_ms * parallel_f,
        contention_per_dop_ms: p.contention_per_dop_ms * parallel_f,
        spill_penalty_ms: p.spill_penalty_ms * parallel_f,
        ..*p
    };
    let mut sat_index = 0;
    if !archetype.saturation_choices.is_empty() {
        sat_index = rng.random_range(0..archetype.saturation_choices.len());
        curve.saturation_dop = archetype.saturation_choices[sat_index];
    }
    if !archetype.spill_choices.is_empty() {
        curve.spill_dop = Some(archetype.spill_choices[rng.random_range(0..archetype.spill_choices.len())]);
    }

    let shape = &archetype.shape;
    let depth = rng.random_range(shape.depth.0..=shape.depth.1);
    let skeleton = grow_skeleton(rng, depth, shape.fanout);

    let mut nodes: Vec<OperatorNode> = Vec::new();
    let id_of = |nodes: &mut Vec<OperatorNode>, op: &OperatorTemplate| {
        let id = nodes.len() as NodeId;
        nodes.push(op.node(id));
        id
    };
    // Top chain.
    let mut top_ids = Vec::new();
    for op in &shape.top {
        top_ids.push(id_of(&mut nodes, op));
    }
    // Exchanges encode the saturation level of the template.
    let mut exchange_ids = Vec::new();
    if let Some(ex) = &shape.exchange {
        for _ in 0..=sat_index {
            exchange_ids.push(id_of(&mut nodes, ex));
        }
    }
    let base = nodes.len();
    for children in &skeleton.parent_children {
        let op = match children.len() {
            0 => &shape.leaves[rng.random_range(0..shape.leaves.len())],
            1 => &shape.unary[rng.random_range(0..shape.unary.len())],
            _ => &shape.binary[rng.random_range(0..shape.binary.len())],
        };
        id_of(&mut nodes, op);
    }
    for (i, children) in skeleton.parent_children.iter().enumerate() {
        nodes[base + i].children = children.iter().map(|c| (base + c) as NodeId).collect();
    }
    let chain: Vec<NodeId> = top_ids.iter().chain(&exchange_ids).copied().chain([base as NodeId]).collect();
    for pair in chain.windows(2) {
        nodes[pair[0] as usize].children.insert(0, pair[1]);
    }
    let shares = (0..nodes.len()).map(|_| rng.random_range(0.5..1.5)).collect();
    TemplateDraft { info: TemplateInfo { template_id, kind: archetype.kind, curve }, nodes, shares }
}

fn instantiate(
    draft: &TemplateDraft,
    plan_id: String,
    corpus_id: &str,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> (QueryPlan, LatencyCurve) {
    let curve = draft.info.curve.scaled(scale);
    let serial_total = curve.serial_ms * BYTES_PER_MS;
    let parallel_total = curve.parallel_ms * BYTES_PER_MS;
    // The result operator (node 0) carries the serial work. Parallel work
    // sits mostly on the leaves, the rest on parallel inner operators.
    let is_parallel = |n: &OperatorNode| n.parallel == ParallelMode::Parallel;
    let share_sum = |pick: &dyn Fn(&OperatorNode) -> bool| -> f64 {
        draft.nodes.iter().zip(&draft.shares).filter(|(n, _)| pick(n)).map(|(_, s)| s).sum()
    };
    let leaf_shares = share_sum(&|n| is_parallel(n) && n.is_leaf());
    let inner_shares = share_sum(&|n| is_parallel(n) && !n.is_leaf());
    let leaf_fraction = if inner_shares == 0.0 {
        1.0
    } else if leaf_shares == 0.0 {
        0.0
    } else {
        0.9
    };
    let serial_shares = share_sum(&|n| !is_parallel(n) && n.id != 0);

    let nodes = draft
        .nodes
        .iter()
        .zip(&draft.shares)
        .map(|(node, share)| {
            let base = if node.id == 0 {
                serial_total
            } else if !is_parallel(node) {
                0.2 * serial_total * share / serial_shares
            } else if node.is_leaf() {
                leaf_fraction * parallel_total * share / leaf_shares
            } else {
                (1.0 - leaf_fraction) * parallel_total * share / inner_shares
            };
            let bytes = (base * rng.random_range(0.99..1.01)).round();
            let cpu = bytes * 1e-6 * rng.random_range(0.8..1.2);
            let io = if node.is_leaf() { bytes * 2e-6 * rng.random_range(0.8..1.2) } else { 0.0 };
            node.clone().with_estimates(bytes, cpu, io)
        })
        .collect();
    let plan = QueryPlan::new(plan_id, Some(draft.info.template_id.clone()), Some(corpus_id.to_string()), 0, nodes)
        .expect("generated plans are valid trees");
    (plan, curve)
}

/// Generates plans and a complete latency grid over `dop_set`.
pub fn generate_corpus(spec: &CorpusSpec, dop_set: &[u32], seed: u64) -> Result<SyntheticCorpus, SynthError> {
    if spec.entries.is_empty() {
        return Err(SynthError::InvalidSpec("no archetype entries".into()));
    }
    if !(spec.scale > 0.0 && spec.scale.is_finite()) || !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(SynthError::InvalidSpec("scale must be positive and sigma non-negative".into()));
    }
    if dop_set.is_empty() || dop_set.contains(&0) {
        return Err(SynthError::InvalidSpec("DOP set must be non-empty and exclude 0".into()));
    }
    for entry in &spec.entries {
        entry.archetype.validate(dop_set)?;
        if entry.n_templates == 0 || entry.n_plans_per_template == 0 {
            return Err(SynthError::InvalidSpec("entries need at least one template and plan".into()));
        }
    }
    let template_seed = spec.template_seed.unwrap_or(seed);

    let mut plans = Vec::new();
    let mut records = Vec::new();
    let mut templates = Vec::new();
    let mut curves = BTreeMap::new();
    let mut t_index = 0u64;
    for entry in &spec.entries {
        for _ in 0..entry.n_templates {
            let mut t_rng = ChaCha8Rng::seed_from_u64(template_seed);
            t_rng.set_stream(t_index);
            let template_id = format!("t{t_index:03}");
            let draft = draw_template(&entry.archetype, template_id.clone(), &mut t_rng);

            let mut p_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d0f9_1a75);
            p_rng.set_stream(t_index);
            for p in 0..entry.n_plans_per_template {
                let scale = spec.scale * p_rng.random_range(0.8..1.25);
                let plan_id = format!("{}-{template_id}-p{p:02}", spec.corpus_id);
                let (plan, curve) = instantiate(&draft, plan_id.clone(), &spec.corpus_id, scale, &mut p_rng);
                for &dop in dop_set {
                    let latency_ms = ground_truth_latency(&curve, dop, spec.sigma, &mut p_rng)?;
                    records.push(LatencyRecord { plan_id: plan_id.clone(), dop, latency_ms });
                }
                curves.insert(plan_id, curve);
                plans.push(plan);
            }
            templates.push(draft.info);
            t_index += 1;
        }
    }
    let workload = Workload::new(plans, records, dop_set).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    Ok(SyntheticCorpus { workload, templates, curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::DEFAULT_DOP_SET;
    use std::collections::BTreeSet;

    fn curve(serial: f64, parallel: f64, sat: u32, contention: f64) -> LatencyCurve {
        LatencyCurve {
            serial_ms: serial,
            parallel_ms: parallel,
            saturation_dop: sat,
            contention_per_dop_ms: contention,
            spill_dop: None,
            spill_penalty_ms: 0.0,
        }
    }

    #[test]
    fn closed_form_curves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let flat = curve(100.0, 0.0, 1, 0.0);
        for d in DEFAULT_DOP_SET {
            assert_eq!(ground_truth_latency(&flat, d, 0.0, &mut rng).unwrap(), 100.0);
        }
        let par = curve(0.0, 800.0, 80, 0.0);
        assert_eq!(ground_truth_latency(&par, 1, 0.0, &mut rng).unwrap(), 800.0);
        assert_eq!(ground_truth_latency(&par, 8, 0.0, &mut rng).unwrap(), 100.0);
        let spill = LatencyCurve { spill_dop: Some(20), spill_penalty_ms: 500.0, ..curve(10.0, 100.0, 80, 0.0) };
        assert!(spill.latency(16).unwrap() < spill.latency(32).unwrap());
        assert_eq!(spill.latency(20).unwrap(), 10.0 + 5.0);
        assert_eq!(spill.latency(32).unwrap(), 10.0 + 100.0 / 32.0 + 500.0);
        let sat = curve(10.0, 160.0, 8, 1.0);
        assert_eq!(sat.latency(16).unwrap(), 10.0 + 20.0 + 16.0);
        assert!(matches!(ground_truth_latency(&par, 0, 0.0, &mut rng), Err(SynthError::InvalidDop(0))));
    }

    #[test]
    fn noise_is_multiplicative_and_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = curve(10.0, 100.0, 80, 0.0);
        let samples: Vec<f64> = (0..500).map(|_| ground_truth_latency(&c, 4, 0.02, &mut rng).unwrap()).collect();
        assert!(samples.iter().all(|t| *t > 0.0));
        let mean_log = samples.iter().map(|t| (t / 35.0).ln()).sum::<f64>() / 500.0;
        assert!(mean_log.abs() < 0.005);
    }

    #[test]
    fn grid_size_and_determinism() {
        let spec = CorpusSpec::new("c", vec![CorpusEntry::preset(ArchetypeKind::Parallelizable, 1, 1)]);
        let corpus = generate_corpus(&spec, &DEFAULT_DOP_SET, 3).unwrap();
        assert_eq!(corpus.workload.plans().len(), 1);
        assert_eq!(corpus.workload.records().len(), 10);

        let mixed = CorpusSpec::new("c", ArchetypeKind::ALL.iter().map(|k| CorpusEntry::preset(*k, 2, 3)).collect());
        let a = generate_corpus(&mixed, &DEFAULT_DOP_SET, 11).unwrap();
        let b = generate_corpus(&mixed, &DEFAULT_DOP_SET, 11).unwrap();
        assert_eq!(a.workload, b.workload);
        assert_ne!(a.workload, generate_corpus(&mixed, &DEFAULT_DOP_SET, 12).unwrap().workload);
        assert_eq!(a.templates.len(), 8);
        for plan in a.workload.plans() {
            assert!(plan.template_id().is_some());
            assert_eq!(plan.corpus_id(), Some("c"));
            assert!(plan.len() <= MAX_NODES + 5);
        }
    }

    #[test]
    fn shared_template_seed_shares_templates() {
        let entries = vec![CorpusEntry::preset(ArchetypeKind::Saturating, 3, 2)];
        let small = CorpusSpec::new("s100", entries.clone()).with_template_seed(5);
        let large = CorpusSpec::new("s300", entries).with_template_seed(5).with_scale(3.0);
        let a = generate_corpus(&small, &DEFAULT_DOP_SET, 1).unwrap();
        let b = generate_corpus(&large, &DEFAULT_DOP_SET, 2).unwrap();
        assert_eq!(a.templates, b.templates);
        let ops = |c: &SyntheticCorpus| -> Vec<Vec<String>> {
            c.workload.plans().iter().map(|p| p.nodes().iter().map(|n| n.operator.clone()).collect()).collect()
        };
        assert_eq!(ops(&a), ops(&b));
    }

    #[test]
    fn archetype_vocabularies_differ() {
        let spec = CorpusSpec::new("c", ArchetypeKind::ALL.iter().map(|k| CorpusEntry::preset(*k, 3, 2)).collect());
        let corpus = generate_corpus(&spec, &DEFAULT_DOP_SET, 9).unwrap();
        let mut keys: BTreeMap<ArchetypeKind, BTreeSet<String>> = BTreeMap::new();
        for plan in corpus.workload.plans() {
            let kind = corpus.kind_of_template(plan.template_id().unwrap()).unwrap();
            keys.entry(kind).or_default().extend(plan.nodes().iter().map(|n| n.composite_key().to_string()));
        }
        let sets: Vec<&BTreeSet<String>> = keys.values().collect();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                assert_ne!(sets[i], sets[j]);
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let mut spill = TemplateArchetype::preset(ArchetypeKind::SpillCliff);
        spill.spill_choices = vec![24];
        let spec =
            CorpusSpec::new("c", vec![CorpusEntry { archetype: spill, n_templates: 1, n_plans_per_template: 1 }]);
        assert!(matches!(generate_corpus(&spec, &DEFAULT_DOP_SET, 0), Err(SynthError::InvalidSpec(_))));
        assert!(matches!(
            generate_corpus(&CorpusSpec::new("c", vec![]), &DEFAULT_DOP_SET, 0),
            Err(SynthError::InvalidSpec(_))
        ));
        let mut neg = TemplateArchetype::preset(ArchetypeKind::Flat);
        neg.params.serial_ms = -1.0;
        assert!(neg.validate(&DEFAULT_DOP_SET).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = CorpusSpec::new("c", vec![CorpusEntry::preset(ArchetypeKind::SpillCliff, 1, 2)]);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<CorpusSpec>(&text).unwrap(), spec);
    }
}
