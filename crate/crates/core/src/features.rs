//! Fixed-dimension plan encoding over composite-key channels.
//!
//! Every composite key seen while building a [`FeatureRegistry`] owns a block
//! of slots, one per enabled channel (cost takes two: cpu and io). Measures
//! are summed over all nodes sharing a key. A single trailing slot carries the
//! degree of parallelism.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::plan::{CompositeKey, NodeId, QueryPlan};

pub const REGISTRY_FORMAT: &str = "doptune-registry";
pub const REGISTRY_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot build a registry from an empty plan list")]
    EmptyCorpus,
    #[error("invalid DOP {0}: must be at least 1")]
    InvalidDop(u32),
    #[error("unknown channel {0:?} (expected count, card, cost or weight)")]
    UnknownChannel(String),
    #[error("channel set is empty")]
    EmptyChannelSet,
    #[error("registry file: {0}")]
    RegistryFormat(String),
    #[error("feature CSV: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Count,
    Card,
    Cost,
    Weight,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Count, Channel::Card, Channel::Cost, Channel::Weight];

    pub fn width(self) -> usize {
        match self {
            Channel::Cost => 2,
            _ => 1,
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    fn slot_suffixes(self) -> &'static [&'static str] {
        match self {
            Channel::Count => &["count"],
            Channel::Card => &["card"],
            Channel::Cost => &["cost_cpu", "cost_io"],
            Channel::Weight => &["weight"],
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Count => "count",
            Channel::Card => "card",
            Channel::Cost => "cost",
            Channel::Weight => "weight",
        })
    }
}

impl FromStr for Channel {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "count" => Ok(Channel::Count),
            "card" => Ok(Channel::Card),
            "cost" => Ok(Channel::Cost),
            "weight" => Ok(Channel::Weight),
            other => Err(FeatureError::UnknownChannel(other.to_string())),
        }
    }
}

/// Enabled subset of channels, always iterated in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Channel>", into = "Vec<Channel>")]
pub struct ChannelSet(u8);

impl ChannelSet {
    pub fn all() -> Self {
        ChannelSet(0b1111)
    }

    pub fn without(self, channel: Channel) -> Self {
        ChannelSet(self.0 & !channel.bit())
    }

    pub fn contains(self, channel: Channel) -> bool {
        self.0 & channel.bit() != 0
    }

    pub fn channels(self) -> impl Iterator<Item = Channel> {
        Channel::ALL.into_iter().filter(move |c| self.contains(*c))
    }

    /// Slots used per composite key.
    pub fn width(self) -> usize {
        self.channels().map(Channel::width).sum()
    }

    pub fn is_subset_of(self, other: ChannelSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn from_channels(channels: impl IntoIterator<Item = Channel>) -> Result<Self, FeatureError> {
        let mask = channels.into_iter().fold(0u8, |m, c| m | c.bit());
        if mask == 0 {
            return Err(FeatureError::EmptyChannelSet);
        }
        Ok(ChannelSet(mask))
    }
}

/// Count, card and weight: cost is left out by default.
impl Default for ChannelSet {
    fn default() -> Self {
        ChannelSet::all().without(Channel::Cost)
    }
}

impl TryFrom<Vec<Channel>> for ChannelSet {
    type Error = FeatureError;

    fn try_from(value: Vec<Channel>) -> Result<Self, Self::Error> {
        ChannelSet::from_channels(value)
    }
}

impl From<ChannelSet> for Vec<Channel> {
    fn from(set: ChannelSet) -> Self {
        set.channels().collect()
    }
}

impl FromStr for ChannelSet {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let channels = s
            .split(',')
            .filter(|part| !part.trim().is_empty())
            .map(Channel::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        ChannelSet::from_channels(channels)
    }
}

impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.channels().map(|c| c.to_string()).collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct FeatureRegistry {
    keys: Vec<CompositeKey>,
    channels: ChannelSet,
    log_transform: bool,
    lookup: HashMap<CompositeKey, usize>,
    fingerprint: String,
}

impl PartialEq for FeatureRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.keys == other.keys && self.channels == other.channels && self.log_transform == other.log_transform
    }
}

#[derive(Serialize, Deserialize)]
struct RegistryDoc {
    format: String,
    version: u32,
    channels: ChannelSet,
    log_transform: bool,
    keys: Vec<CompositeKey>,
}

impl FeatureRegistry {
    pub fn from_keys(keys: Vec<CompositeKey>, channels: ChannelSet, log_transform: bool) -> Self {
        let mut lookup = HashMap::with_capacity(keys.len());
        let mut unique = Vec::with_capacity(keys.len());
        for key in keys {
            if !lookup.contains_key(&key) {
                lookup.insert(key.clone(), unique.len());
                unique.push(key);
            }
        }
        let mut registry =
            FeatureRegistry { keys: unique, channels, log_transform, lookup, fingerprint: String::new() };
        let digest = Sha256::digest(registry.canonical_json());
        registry.fingerprint = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        registry
    }

    /// Same registry over a different channel subset. Keys and their order are kept.
    pub fn with_channels(&self, channels: ChannelSet) -> Self {
        FeatureRegistry::from_keys(self.keys.clone(), channels, self.log_transform)
    }

    pub fn with_log_transform(&self, log_transform: bool) -> Self {
        FeatureRegistry::from_keys(self.keys.clone(), self.channels, log_transform)
    }

    fn canonical_json(&self) -> Vec<u8> {
        serde_json::to_vec(&RegistryDoc {
            format: REGISTRY_FORMAT.to_string(),
            version: REGISTRY_VERSION,
            channels: self.channels,
            log_transform: self.log_transform,
            keys: self.keys.clone(),
        })
        .expect("registry serializes")
    }

    pub fn keys(&self) -> &[CompositeKey] {
        &self.keys
    }

    pub fn channels(&self) -> ChannelSet {
        self.channels
    }

    pub fn log_transform(&self) -> bool {
        self.log_transform
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn slot_of(&self, key: &CompositeKey) -> Option<usize> {
        self.lookup.get(key).copied()
    }

    /// Total vector length including the trailing DOP slot.
    pub fn dimension(&self) -> usize {
        self.keys.len() * self.channels.width() + 1
    }

    pub fn dop_slot(&self) -> usize {
        self.dimension() - 1
    }

    pub fn slot_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dimension());
        for key in &self.keys {
            for channel in self.channels.channels() {
                for suffix in channel.slot_suffixes() {
                    names.push(format!("{key}#{suffix}"));
                }
            }
        }
        names.push("dop".to_string());
        names
    }

    /// Index of `(key, channel, sub-slot)` in vectors produced by this registry.
    pub fn slot_index(&self, key_index: usize, channel: Channel, sub: usize) -> Option<usize> {
        if key_index >= self.keys.len() || !self.channels.contains(channel) || sub >= channel.width() {
            return None;
        }
        let before: usize = self.channels.channels().take_while(|c| *c != channel).map(Channel::width).sum();
        Some(key_index * self.channels.width() + before + sub)
    }

    pub fn to_json(&self) -> String {
        let doc = RegistryDoc {
            format: REGISTRY_FORMAT.to_string(),
            version: REGISTRY_VERSION,
            channels: self.channels,
            log_transform: self.log_transform,
            keys: self.keys.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("registry serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let doc: RegistryDoc = serde_json::from_str(text).map_err(|e| FeatureError::RegistryFormat(e.to_string()))?;
        if doc.format != REGISTRY_FORMAT {
            return Err(FeatureError::RegistryFormat(format!("unexpected format tag {:?}", doc.format)));
        }
        if doc.version != REGISTRY_VERSION {
            return Err(FeatureError::RegistryFormat(format!("unsupported version {}", doc.version)));
        }
        Ok(FeatureRegistry::from_keys(doc.keys, doc.channels, doc.log_transform))
    }
}

/// Collects every composite key across `plans`, in first-appearance order
/// over plans sorted by id and nodes sorted by id.
pub fn build_registry(plans: &[QueryPlan], channels: ChannelSet) -> Result<FeatureRegistry, FeatureError> {
    if plans.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut sorted: Vec<&QueryPlan> = plans.iter().collect();
    sorted.sort_by(|a, b| a.plan_id().cmp(b.plan_id()));
    let keys = sorted.into_iter().flat_map(|p| p.nodes().iter().map(|n| n.composite_key())).collect();
    Ok(FeatureRegistry::from_keys(keys, channels, false))
}

/// Height of every node: leaves are 1, parents one more than their tallest child.
pub fn node_heights(plan: &QueryPlan) -> BTreeMap<NodeId, u32> {
    let mut heights = BTreeMap::new();
    for id in plan.post_order() {
        let node = plan.node(id).expect("post_order yields plan nodes");
        let h = 1 + node.children.iter().map(|c| heights[c]).max().unwrap_or(0);
        heights.insert(id, h);
    }
    heights
}

/// Leaf weight is the estimated output size; an internal node sums
/// `weight(child) * height(child)` over its children (taken in id order so the
/// result does not depend on sibling order).
pub fn node_weights(plan: &QueryPlan) -> BTreeMap<NodeId, f64> {
    let heights = node_heights(plan);
    let mut weights = BTreeMap::new();
    for id in plan.post_order() {
        let node = plan.node(id).expect("post_order yields plan nodes");
        let w = if node.is_leaf() {
            node.est_output_bytes
        } else {
            let mut children = node.children.clone();
            children.sort_unstable();
            children.iter().map(|c| weights[c] * f64::from(heights[c])).sum()
        };
        weights.insert(id, w);
    }
    weights
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub registry_fingerprint: String,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, registry_fingerprint: impl Into<String>) -> Self {
        FeatureVector { values, registry_fingerprint: registry_fingerprint.into() }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    /// Value of the trailing DOP slot.
    pub fn dop(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Featurized {
    pub vector: FeatureVector,
    /// Distinct composite keys in the plan that the registry does not know.
    pub unknown_keys: usize,
}

pub fn featurize(plan: &QueryPlan, registry: &FeatureRegistry) -> Featurized {
    let channels = registry.channels();
    let width = channels.width();
    let mut values = vec![0.0; registry.dimension()];
    let weights = if channels.contains(Channel::Weight) { Some(node_weights(plan)) } else { None };
    let mut unknown = HashSet::new();

    for node in plan.nodes() {
        let key = node.composite_key();
        let Some(k) = registry.slot_of(&key) else {
            unknown.insert(key);
            continue;
        };
        let mut slot = k * width;
        for channel in channels.channels() {
            match channel {
                Channel::Count => values[slot] += 1.0,
                Channel::Card => values[slot] += node.est_output_bytes,
                Channel::Cost => {
                    values[slot] += node.est_cpu_cost;
                    values[slot + 1] += node.est_io_cost;
                }
                Channel::Weight => values[slot] += weights.as_ref().unwrap()[&node.id],
            }
            slot += channel.width();
        }
    }

    if registry.log_transform() {
        for k in 0..registry.keys().len() {
            let mut slot = k * width;
            for channel in channels.channels() {
                if channel != Channel::Count {
                    for v in &mut values[slot..slot + channel.width()] {
                        *v = v.ln_1p();
                    }
                }
                slot += channel.width();
            }
        }
    }

    Featurized { vector: FeatureVector::new(values, registry.fingerprint()), unknown_keys: unknown.len() }
}

pub fn attach_dop(vector: &FeatureVector, dop: u32) -> Result<FeatureVector, FeatureError> {
    if dop < 1 {
        return Err(FeatureError::InvalidDop(dop));
    }
    let mut out = vector.clone();
    if let Some(last) = out.values.last_mut() {
        *last = f64::from(dop);
    }
    Ok(out)
}

/// A featurized plan measured at one DOP.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPoint {
    pub features: FeatureVector,
    pub dop: u32,
    pub latency_ms: f64,
    pub plan_id: String,
    pub template_id: Option<String>,
    pub corpus_id: Option<String>,
}

/// One row of a feature matrix export.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub plan_id: String,
    pub template_id: Option<String>,
    pub corpus_id: Option<String>,
    pub vector: FeatureVector,
}

impl FeatureRow {
    pub fn from_plan(plan: &QueryPlan, registry: &FeatureRegistry) -> Self {
        FeatureRow {
            plan_id: plan.plan_id().to_string(),
            template_id: plan.template_id().map(str::to_string),
            corpus_id: plan.corpus_id().map(str::to_string),
            vector: featurize(plan, registry).vector,
        }
    }
}

const META_COLUMNS: [&str; 3] = ["plan_id", "template_id", "corpus_id"];

pub fn write_feature_csv(registry: &FeatureRegistry, rows: &[FeatureRow]) -> Result<String, FeatureError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(registry.slot_names());
    writer.write_record(&header).map_err(|e| FeatureError::Csv(e.to_string()))?;
    for row in rows {
        let mut record = vec![
            row.plan_id.clone(),
            row.template_id.clone().unwrap_or_default(),
            row.corpus_id.clone().unwrap_or_default(),
        ];
        record.extend(row.vector.values.iter().map(|v| v.to_string()));
        writer.write_record(&record).map_err(|e| FeatureError::Csv(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| FeatureError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads a feature matrix written by [`write_feature_csv`], checking the
/// header against `registry`.
pub fn read_feature_csv(registry: &FeatureRegistry, text: &str) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| FeatureError::Csv(e.to_string()))?.clone();
    let mut expected: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
    expected.extend(registry.slot_names());
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(FeatureError::Csv("header does not match the registry".to_string()));
    }
    let opt = |s: &str| if s.is_empty() { None } else { Some(s.to_string()) };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| FeatureError::Csv(e.to_string()))?;
        let values = record
            .iter()
            .skip(META_COLUMNS.len())
            .map(|v| v.parse::<f64>().map_err(|e| FeatureError::Csv(format!("{v:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(FeatureRow {
            plan_id: record[0].to_string(),
            template_id: opt(&record[1]),
            corpus_id: opt(&record[2]),
            vector: FeatureVector::new(values, registry.fingerprint()),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{OperatorNode, ParallelMode, RowBatch};

    fn scan(id: NodeId, bytes: f64) -> OperatorNode {
        OperatorNode::new(id, "TableScan", RowBatch::Batch, ParallelMode::Parallel).with_estimates(bytes, 1.0, 2.0)
    }

    fn plan(id: &str, root: NodeId, nodes: Vec<OperatorNode>) -> QueryPlan {
        QueryPlan::new(id, None, None, root, nodes).unwrap()
    }

    #[test]
    fn registry_dedups_and_unions() {
        let p = plan("a", 0, vec![scan(0, 1.0).with_children([1]), scan(1, 1.0)]);
        let reg = build_registry(std::slice::from_ref(&p), ChannelSet::all()).unwrap();
        assert_eq!(reg.keys().len(), 1);

        let op = |id, name: &str| OperatorNode::new(id, name, RowBatch::Row, ParallelMode::Parallel);
        let p1 = plan("p1", 0, vec![op(0, "A").with_children([1]), op(1, "B")]);
        let p2 = plan("p2", 0, vec![op(0, "C").with_children([1, 2]), op(1, "D"), op(2, "E")]);
        let plans = vec![p2.clone(), p1.clone()];
        let reg = build_registry(&plans, ChannelSet::default()).unwrap();
        assert_eq!(reg.keys().len(), 5);
        let names: Vec<_> = reg.keys().iter().map(|k| k.operator.as_str()).collect();
        assert_eq!(names, ["A", "B", "C", "D", "E"]);
        assert_eq!(reg, build_registry(&plans, ChannelSet::default()).unwrap());
        assert_eq!(reg.fingerprint(), build_registry(&[p1, p2], ChannelSet::default()).unwrap().fingerprint());
        assert_eq!(reg.dimension(), 5 * 3 + 1);
        assert!(matches!(build_registry(&[], ChannelSet::all()), Err(FeatureError::EmptyCorpus)));
    }

    #[test]
    fn heights() {
        let single = plan("s", 0, vec![scan(0, 5.0)]);
        assert_eq!(node_heights(&single), BTreeMap::from([(0, 1)]));

        let chain = plan("c", 0, vec![scan(0, 0.0).with_children([1]), scan(1, 0.0).with_children([2]), scan(2, 0.0)]);
        assert_eq!(node_heights(&chain), BTreeMap::from([(2, 1), (1, 2), (0, 3)]));

        let fork = plan("f", 0, vec![scan(0, 0.0).with_children([1, 2]), scan(1, 0.0), scan(2, 0.0)]);
        assert_eq!(node_heights(&fork)[&0], 2);
    }

    #[test]
    fn weights() {
        let leaf = plan("l", 0, vec![scan(0, 100.0)]);
        assert_eq!(node_weights(&leaf)[&0], 100.0);

        let fork = plan("f", 0, vec![scan(0, 999.0).with_children([1, 2]), scan(1, 10.0), scan(2, 20.0)]);
        assert_eq!(node_weights(&fork)[&0], 30.0);

        // Bottom-up by hand: mid = 8 * 1, root = mid * height(mid) = 8 * 2.
        let chain = plan("c", 0, vec![scan(0, 1.0).with_children([1]), scan(1, 1.0).with_children([2]), scan(2, 8.0)]);
        let w = node_weights(&chain);
        assert_eq!(w[&1], 8.0);
        assert_eq!(w[&0], 16.0);
    }

    #[test]
    fn featurize_sums_per_key() {
        let p = plan("p", 0, vec![scan(0, 100.0).with_children([1]), scan(1, 50.0)]);
        let reg = build_registry(std::slice::from_ref(&p), ChannelSet::all()).unwrap();
        let f = featurize(&p, &reg);
        assert_eq!(f.unknown_keys, 0);
        // count, card, cpu, io, weight, dop
        assert_eq!(f.vector.values, vec![2.0, 150.0, 2.0, 4.0, 50.0 + 50.0, 0.0]);
    }

    #[test]
    fn featurize_with_no_known_keys() {
        let known = plan("k", 0, vec![scan(0, 1.0)]);
        let reg = build_registry(&[known], ChannelSet::default()).unwrap();
        let other = plan(
            "o",
            0,
            vec![
                OperatorNode::new(0, "Sort", RowBatch::Row, ParallelMode::Serial).with_children([1, 2]),
                OperatorNode::new(1, "IndexSeek", RowBatch::Row, ParallelMode::Serial),
                OperatorNode::new(2, "IndexSeek", RowBatch::Row, ParallelMode::Serial),
            ],
        );
        let f = featurize(&other, &reg);
        assert!(f.vector.values.iter().all(|v| *v == 0.0));
        assert_eq!(f.unknown_keys, 2);
    }

    #[test]
    fn distinct_keys_fill_distinct_blocks() {
        let join = OperatorNode::new(0, "HashMatch", RowBatch::Batch, ParallelMode::Parallel)
            .with_attr("logical", "Join")
            .with_estimates(40.0, 3.0, 0.0)
            .with_children([1, 2]);
        let p = plan("fig", 0, vec![join, scan(1, 10.0), scan(2, 20.0)]);
        let reg = build_registry(std::slice::from_ref(&p), ChannelSet::default()).unwrap();
        let v = featurize(&p, &reg).vector.values;
        let hm = reg.slot_of(&p.node(0).unwrap().composite_key()).unwrap();
        let ts = reg.slot_of(&p.node(1).unwrap().composite_key()).unwrap();
        assert_ne!(hm, ts);
        assert_eq!(&v[hm * 3..hm * 3 + 3], &[1.0, 40.0, 30.0]);
        assert_eq!(&v[ts * 3..ts * 3 + 3], &[2.0, 30.0, 30.0]);
    }

    #[test]
    fn attach_dop_sets_trailing_slot() {
        let v = FeatureVector::new(vec![1.0, 2.0, 0.0], "fp");
        assert_eq!(attach_dop(&v, 40).unwrap().values, vec![1.0, 2.0, 40.0]);
        assert_eq!(attach_dop(&v, 1).unwrap().dop(), 1.0);
        assert!(matches!(attach_dop(&v, 0), Err(FeatureError::InvalidDop(0))));
    }

    #[test]
    fn slot_names_and_channels() {
        let p = plan("p", 0, vec![scan(0, 1.0)]);
        let reg = build_registry(std::slice::from_ref(&p), "count,card,weight".parse().unwrap()).unwrap();
        assert_eq!(
            reg.slot_names(),
            [
                "TableScan/batch/parallel/#count",
                "TableScan/batch/parallel/#card",
                "TableScan/batch/parallel/#weight",
                "dop"
            ]
        );
        let all = reg.with_channels(ChannelSet::all());
        assert_eq!(all.slot_index(0, Channel::Cost, 1), Some(3));
        assert_eq!(all.slot_index(0, Channel::Weight, 0), Some(4));
        assert_eq!(reg.slot_index(0, Channel::Cost, 0), None);
        assert!("count,bogus".parse::<ChannelSet>().is_err());
        assert!("".parse::<ChannelSet>().is_err());
        assert_eq!(ChannelSet::default().to_string(), "count,card,weight");
    }

    #[test]
    fn log_transform_leaves_counts() {
        let p = plan("p", 0, vec![scan(0, 100.0)]);
        let reg = build_registry(std::slice::from_ref(&p), ChannelSet::default()).unwrap().with_log_transform(true);
        let v = featurize(&p, &reg).vector.values;
        assert_eq!(v, vec![1.0, 100f64.ln_1p(), 100f64.ln_1p(), 0.0]);
    }

    #[test]
    fn registry_and_csv_files_round_trip() {
        let p = plan(
            "p",
            0,
            vec![
                scan(0, 100.0).with_children([1]),
                OperatorNode::new(1, "X", RowBatch::Row, ParallelMode::Serial).with_attr("a", "b"),
            ],
        );
        let reg = build_registry(std::slice::from_ref(&p), ChannelSet::all()).unwrap();
        let back = FeatureRegistry::from_json(&reg.to_json()).unwrap();
        assert_eq!(back, reg);
        assert_eq!(back.fingerprint(), reg.fingerprint());

        let rows = vec![FeatureRow::from_plan(&p, &reg)];
        let text = write_feature_csv(&reg, &rows).unwrap();
        assert!(text.starts_with("plan_id,template_id,corpus_id,TableScan/batch/parallel/#count"));
        assert_eq!(read_feature_csv(&reg, &text).unwrap(), rows);
        let other = reg.with_channels(ChannelSet::default());
        assert!(read_feature_csv(&other, &text).is_err());
    }
}
