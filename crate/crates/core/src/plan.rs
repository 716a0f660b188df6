//! Physical query-plan trees, operator execution modes and composite keys.
//!
//! Plans are read from a small JSON schema, one plan per document. A file may
//! hold a single (possibly pretty-printed) plan or a newline-delimited list of
//! plans. Every parsed plan is validated: unique node ids, children that point
//! at existing nodes, no cycles, a single root and non-negative estimates.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("malformed plan document: {0}")]
    MalformedDocument(String),
    #[error("plan {plan}: node {node} lists unknown child {child}")]
    DanglingChild { plan: String, node: NodeId, child: NodeId },
    #[error("plan {plan}: cycle through node {node}")]
    CycleDetected { plan: String, node: NodeId },
    #[error("plan {plan}: node {node} has invalid {field} estimate {value}")]
    NegativeEstimate { plan: String, node: NodeId, field: &'static str, value: f64 },
    #[error("plan {plan}: node {node} has unknown {field} mode {value:?}")]
    UnknownMode { plan: String, node: NodeId, field: &'static str, value: String },
    #[error("plan {plan}: duplicate node id {node}")]
    DuplicateNode { plan: String, node: NodeId },
    #[error("plan {plan}: root {root} is not a node")]
    MissingRoot { plan: String, root: NodeId },
    #[error("plan {plan}: not a tree ({reason})")]
    NotATree { plan: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowBatch {
    Row,
    Batch,
}

impl RowBatch {
    pub fn as_str(self) -> &'static str {
        match self {
            RowBatch::Row => "row",
            RowBatch::Batch => "batch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParallelMode {
    Parallel,
    Serial,
}

impl ParallelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParallelMode::Parallel => "parallel",
            ParallelMode::Serial => "serial",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorNode {
    pub id: NodeId,
    pub operator: String,
    pub row_batch: RowBatch,
    pub parallel: ParallelMode,
    pub attrs: Vec<(String, String)>,
    /// Estimated output size in bytes.
    pub est_output_bytes: f64,
    pub est_cpu_cost: f64,
    pub est_io_cost: f64,
    pub children: Vec<NodeId>,
}

impl OperatorNode {
    pub fn new(id: NodeId, operator: impl Into<String>, row_batch: RowBatch, parallel: ParallelMode) -> Self {
        OperatorNode {
            id,
            operator: operator.into(),
            row_batch,
            parallel,
            attrs: Vec::new(),
            est_output_bytes: 0.0,
            est_cpu_cost: 0.0,
            est_io_cost: 0.0,
            children: Vec::new(),
        }
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.push((name.into(), value.into()));
        self
    }

    pub fn with_estimates(mut self, output_bytes: f64, cpu_cost: f64, io_cost: f64) -> Self {
        self.est_output_bytes = output_bytes;
        self.est_cpu_cost = cpu_cost;
        self.est_io_cost = io_cost;
        self
    }

    pub fn with_children(mut self, children: impl IntoIterator<Item = NodeId>) -> Self {
        self.children = children.into_iter().collect();
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn composite_key(&self) -> CompositeKey {
        composite_key(self)
    }
}

/// Identity of an operator configuration: operator name, both execution
/// modes and the optional attributes sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CompositeKey {
    pub operator: String,
    pub row_batch: RowBatch,
    pub parallel: ParallelMode,
    pub attrs: Vec<(String, String)>,
}

impl fmt::Display for CompositeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/", self.operator, self.row_batch.as_str(), self.parallel.as_str())?;
        for (i, (name, value)) in self.attrs.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{name}={value}")?;
        }
        Ok(())
    }
}

pub fn composite_key(node: &OperatorNode) -> CompositeKey {
    let mut attrs = node.attrs.clone();
    attrs.sort();
    CompositeKey { operator: node.operator.clone(), row_batch: node.row_batch, parallel: node.parallel, attrs }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanWarning {
    /// No operator in the plan runs in parallel mode.
    NoParallelOperator,
}

/// A validated plan tree. Nodes are kept sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPlan {
    plan_id: String,
    template_id: Option<String>,
    corpus_id: Option<String>,
    root: NodeId,
    nodes: Vec<OperatorNode>,
    index: HashMap<NodeId, usize>,
}

impl QueryPlan {
    pub fn new(
        plan_id: impl Into<String>,
        template_id: Option<String>,
        corpus_id: Option<String>,
        root: NodeId,
        mut nodes: Vec<OperatorNode>,
    ) -> Result<Self, PlanError> {
        let plan_id = plan_id.into();
        nodes.sort_by_key(|n| n.id);
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id, i).is_some() {
                return Err(PlanError::DuplicateNode { plan: plan_id, node: node.id });
            }
        }
        let plan = QueryPlan { plan_id, template_id, corpus_id, root, nodes, index };
        plan.validate()?;
        Ok(plan)
    }

    fn validate(&self) -> Result<(), PlanError> {
        let plan = || self.plan_id.clone();
        if !self.index.contains_key(&self.root) {
            return Err(PlanError::MissingRoot { plan: plan(), root: self.root });
        }
        for node in &self.nodes {
            for (field, value) in [
                ("output_bytes", node.est_output_bytes),
                ("cpu_cost", node.est_cpu_cost),
                ("io_cost", node.est_io_cost),
            ] {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(PlanError::NegativeEstimate { plan: plan(), node: node.id, field, value });
                }
            }
            for child in &node.children {
                if !self.index.contains_key(child) {
                    return Err(PlanError::DanglingChild { plan: plan(), node: node.id, child: *child });
                }
            }
        }

        // Cycle detection over the whole graph, including parts unreachable from the root.
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let mut marks = vec![Mark::White; self.nodes.len()];
        for start in 0..self.nodes.len() {
            if marks[start] != Mark::White {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            marks[start] = Mark::Grey;
            while let Some((at, next_child)) = stack.pop() {
                let node = &self.nodes[at];
                if next_child < node.children.len() {
                    stack.push((at, next_child + 1));
                    let child = self.index[&node.children[next_child]];
                    match marks[child] {
                        Mark::Grey => {
                            return Err(PlanError::CycleDetected { plan: plan(), node: self.nodes[child].id })
                        }
                        Mark::White => {
                            marks[child] = Mark::Grey;
                            stack.push((child, 0));
                        }
                        Mark::Black => {}
                    }
                } else {
                    marks[at] = Mark::Black;
                }
            }
        }

        let mut parents = vec![0usize; self.nodes.len()];
        for node in &self.nodes {
            for child in &node.children {
                parents[self.index[child]] += 1;
            }
        }
        for (node, count) in self.nodes.iter().zip(&parents) {
            let expected = usize::from(node.id != self.root);
            if *count != expected {
                return Err(PlanError::NotATree {
                    plan: plan(),
                    reason: format!("node {} has {} parents", node.id, count),
                });
            }
        }
        Ok(())
    }

    pub fn plan_id(&self) -> &str {
        &self.plan_id
    }

    pub fn template_id(&self) -> Option<&str> {
        self.template_id.as_deref()
    }

    pub fn corpus_id(&self) -> Option<&str> {
        self.corpus_id.as_deref()
    }

    pub fn set_template_id(&mut self, template_id: Option<String>) {
        self.template_id = template_id;
    }

    pub fn set_corpus_id(&mut self, corpus_id: Option<String>) {
        self.corpus_id = corpus_id;
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> &[OperatorNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&OperatorNode> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids ordered so that every child precedes its parent.
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                order.push(id);
                continue;
            }
            stack.push((id, true));
            let node = &self.nodes[self.index[&id]];
            for child in node.children.iter().rev() {
                stack.push((*child, false));
            }
        }
        order
    }

    pub fn warnings(&self) -> Vec<PlanWarning> {
        let mut warnings = Vec::new();
        if !self.nodes.iter().any(|n| n.parallel == ParallelMode::Parallel) {
            warnings.push(PlanWarning::NoParallelOperator);
        }
        warnings
    }

    pub fn to_json_value(&self) -> Value {
        let doc = PlanDoc {
            plan_id: self.plan_id.clone(),
            template_id: self.template_id.clone(),
            corpus_id: self.corpus_id.clone(),
            root: self.root,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id,
                    op: n.operator.clone(),
                    row_batch: Value::String(n.row_batch.as_str().to_string()),
                    parallel: Value::Bool(n.parallel == ParallelMode::Parallel),
                    attrs: if n.attrs.is_empty() { None } else { Some(n.attrs.iter().cloned().collect()) },
                    est_output_bytes: n.est_output_bytes,
                    est_cpu_cost: n.est_cpu_cost,
                    est_io_cost: n.est_io_cost,
                    children: n.children.clone(),
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("plan documents always serialize")
    }

    /// Single-line JSON, suitable for newline-delimited plan files.
    pub fn to_json_line(&self) -> String {
        self.to_json_value().to_string()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanDoc {
    plan_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    template_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    corpus_id: Option<String>,
    root: NodeId,
    nodes: Vec<NodeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDoc {
    id: NodeId,
    op: String,
    row_batch: Value,
    parallel: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attrs: Option<BTreeMap<String, String>>,
    est_output_bytes: f64,
    est_cpu_cost: f64,
    est_io_cost: f64,
    #[serde(default)]
    children: Vec<NodeId>,
}

impl PlanDoc {
    fn into_plan(self) -> Result<QueryPlan, PlanError> {
        let plan_id = self.plan_id;
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for n in self.nodes {
            let row_batch = match &n.row_batch {
                Value::String(s) if s.eq_ignore_ascii_case("row") => RowBatch::Row,
                Value::String(s) if s.eq_ignore_ascii_case("batch") => RowBatch::Batch,
                other => {
                    return Err(PlanError::UnknownMode {
                        plan: plan_id,
                        node: n.id,
                        field: "row_batch",
                        value: other.to_string(),
                    })
                }
            };
            let parallel = match &n.parallel {
                Value::Bool(true) => ParallelMode::Parallel,
                Value::Bool(false) => ParallelMode::Serial,
                other => {
                    return Err(PlanError::UnknownMode {
                        plan: plan_id,
                        node: n.id,
                        field: "parallel",
                        value: other.to_string(),
                    })
                }
            };
            nodes.push(OperatorNode {
                id: n.id,
                operator: n.op,
                row_batch,
                parallel,
                attrs: n.attrs.unwrap_or_default().into_iter().collect(),
                est_output_bytes: n.est_output_bytes,
                est_cpu_cost: n.est_cpu_cost,
                est_io_cost: n.est_io_cost,
                children: n.children,
            });
        }
        QueryPlan::new(plan_id, self.template_id, self.corpus_id, self.root, nodes)
    }
}

/// Parses exactly one plan.
pub fn parse_plan(document: &[u8]) -> Result<QueryPlan, PlanError> {
    let mut plans = parse_plans(document)?;
    match plans.len() {
        1 => Ok(plans.pop().unwrap()),
        n => Err(PlanError::MalformedDocument(format!("expected one plan, found {n}"))),
    }
}

/// Parses a single-plan document or a newline-delimited sequence of plans.
pub fn parse_plans(document: &[u8]) -> Result<Vec<QueryPlan>, PlanError> {
    let stream = serde_json::Deserializer::from_slice(document).into_iter::<PlanDoc>();
    let mut plans = Vec::new();
    for doc in stream {
        let doc = doc.map_err(|e| PlanError::MalformedDocument(e.to_string()))?;
        let plan = doc.into_plan()?;
        for warning in plan.warnings() {
            log::info!("plan {}: {:?}", plan.plan_id(), warning);
        }
        plans.push(plan);
    }
    Ok(plans)
}

/// Renders plans as newline-delimited JSON.
pub fn write_plans(plans: &[QueryPlan]) -> String {
    let mut out = String::new();
    for plan in plans {
        out.push_str(&plan.to_json_line());
        out.push('\n');
    }
    out
}
