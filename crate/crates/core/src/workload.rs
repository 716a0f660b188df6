//! Plans paired with measured latencies over a DOP grid, plus the latency CSV
//! format (`plan_id,dop,latency_ms`).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{attach_dop, featurize, FeatureRegistry, TrainingPoint};
use crate::plan::QueryPlan;

/// DOP values measured by default.
pub const DEFAULT_DOP_SET: [u32; 10] = [1, 2, 4, 8, 16, 20, 32, 40, 64, 80];

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("latency CSV: {0}")]
    Csv(String),
    #[error("latency for plan {plan} at DOP {dop} must be positive and finite, got {value}")]
    NonPositiveLatency { plan: String, dop: u32, value: f64 },
    #[error("latency recorded for unknown plan {0}")]
    UnknownPlan(String),
    #[error("duplicate latency for plan {plan} at DOP {dop}")]
    DuplicateMeasurement { plan: String, dop: u32 },
    #[error("plan {plan} has no measurement at DOP {dop}")]
    MissingMeasurement { plan: String, dop: u32 },
    #[error("DOP {0} is not in the configured DOP set")]
    DopOutsideSet(u32),
    #[error("duplicate plan id {0}")]
    DuplicatePlan(String),
    #[error("invalid DOP set: {0}")]
    InvalidDopSet(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub plan_id: String,
    pub dop: u32,
    pub latency_ms: f64,
}

pub fn validate_dop_set(dops: &[u32]) -> Result<Vec<u32>, WorkloadError> {
    if dops.is_empty() {
        return Err(WorkloadError::InvalidDopSet("empty".into()));
    }
    if dops.contains(&0) {
        return Err(WorkloadError::InvalidDopSet("DOP 0".into()));
    }
    let set: BTreeSet<u32> = dops.iter().copied().collect();
    Ok(set.into_iter().collect())
}

pub fn parse_dop_set(text: &str) -> Result<Vec<u32>, WorkloadError> {
    let dops = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<u32>().map_err(|e| WorkloadError::InvalidDopSet(format!("{s:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    validate_dop_set(&dops)
}

/// Plans with a complete latency grid over `dop_set`.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    plans: Vec<QueryPlan>,
    latencies: BTreeMap<String, BTreeMap<u32, f64>>,
    dop_set: Vec<u32>,
}

impl Workload {
    pub fn new(plans: Vec<QueryPlan>, records: Vec<LatencyRecord>, dop_set: &[u32]) -> Result<Self, WorkloadError> {
        let dop_set = validate_dop_set(dop_set)?;
        let mut latencies: BTreeMap<String, BTreeMap<u32, f64>> = BTreeMap::new();
        for plan in &plans {
            if latencies.insert(plan.plan_id().to_string(), BTreeMap::new()).is_some() {
                return Err(WorkloadError::DuplicatePlan(plan.plan_id().to_string()));
            }
        }
        for r in records {
            if !(r.latency_ms > 0.0 && r.latency_ms.is_finite()) {
                return Err(WorkloadError::NonPositiveLatency { plan: r.plan_id, dop: r.dop, value: r.latency_ms });
            }
            if dop_set.binary_search(&r.dop).is_err() {
                // Measurements outside the DOP set of interest are ignored.
                continue;
            }
            let row = latencies.get_mut(&r.plan_id).ok_or_else(|| WorkloadError::UnknownPlan(r.plan_id.clone()))?;
            if row.insert(r.dop, r.latency_ms).is_some() {
                return Err(WorkloadError::DuplicateMeasurement { plan: r.plan_id, dop: r.dop });
            }
        }
        for (plan, row) in &latencies {
            if let Some(&dop) = dop_set.iter().find(|d| !row.contains_key(d)) {
                return Err(WorkloadError::MissingMeasurement { plan: plan.clone(), dop });
            }
        }
        Ok(Workload { plans, latencies, dop_set })
    }

    pub fn plans(&self) -> &[QueryPlan] {
        &self.plans
    }

    pub fn dop_set(&self) -> &[u32] {
        &self.dop_set
    }

    pub fn latency_row(&self, plan_id: &str) -> Option<&BTreeMap<u32, f64>> {
        self.latencies.get(plan_id)
    }

    pub fn latency(&self, plan_id: &str, dop: u32) -> Option<f64> {
        self.latencies.get(plan_id)?.get(&dop).copied()
    }

    pub fn records(&self) -> Vec<LatencyRecord> {
        self.plans
            .iter()
            .flat_map(|p| {
                self.latencies[p.plan_id()].iter().map(move |(&dop, &latency_ms)| LatencyRecord {
                    plan_id: p.plan_id().to_string(),
                    dop,
                    latency_ms,
                })
            })
            .collect()
    }

    /// Keeps the plans accepted by `keep`, with their latency rows.
    pub fn filter(&self, mut keep: impl FnMut(&QueryPlan) -> bool) -> Workload {
        let plans: Vec<QueryPlan> = self.plans.iter().filter(|p| keep(p)).cloned().collect();
        let latencies = plans.iter().map(|p| (p.plan_id().to_string(), self.latencies[p.plan_id()].clone())).collect();
        Workload { plans, latencies, dop_set: self.dop_set.clone() }
    }

    /// Concatenates workloads measured over the same DOP set.
    pub fn merge(parts: &[Workload]) -> Result<Workload, WorkloadError> {
        let first = parts.first().ok_or_else(|| WorkloadError::InvalidDopSet("no workloads to merge".into()))?;
        let mut plans = Vec::new();
        let mut latencies = BTreeMap::new();
        for part in parts {
            if part.dop_set != first.dop_set {
                return Err(WorkloadError::InvalidDopSet("merged workloads use different DOP sets".into()));
            }
            for plan in &part.plans {
                if latencies.insert(plan.plan_id().to_string(), part.latencies[plan.plan_id()].clone()).is_some() {
                    return Err(WorkloadError::DuplicatePlan(plan.plan_id().to_string()));
                }
                plans.push(plan.clone());
            }
        }
        Ok(Workload { plans, latencies, dop_set: first.dop_set.clone() })
    }

    /// One training point per (plan, DOP), featurized against `registry`.
    /// Returns the points and the number of distinct unknown keys per plan.
    pub fn training_points(&self, registry: &FeatureRegistry) -> (Vec<TrainingPoint>, HashMap<String, usize>) {
        let mut points = Vec::with_capacity(self.plans.len() * self.dop_set.len());
        let mut unknown = HashMap::new();
        for plan in &self.plans {
            let featurized = featurize(plan, registry);
            unknown.insert(plan.plan_id().to_string(), featurized.unknown_keys);
            for (&dop, &latency_ms) in &self.latencies[plan.plan_id()] {
                points.push(TrainingPoint {
                    features: attach_dop(&featurized.vector, dop).expect("DOP set excludes 0"),
                    dop,
                    latency_ms,
                    plan_id: plan.plan_id().to_string(),
                    template_id: plan.template_id().map(str::to_string),
                    corpus_id: plan.corpus_id().map(str::to_string),
                });
            }
        }
        (points, unknown)
    }
}

pub fn write_latency_csv(records: &[LatencyRecord]) -> Result<String, WorkloadError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in records {
        writer.serialize(r).map_err(|e| WorkloadError::Csv(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| WorkloadError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_latency_csv(text: &str) -> Result<Vec<LatencyRecord>, WorkloadError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader.deserialize().map(|r| r.map_err(|e| WorkloadError::Csv(e.to_string()))).collect()
}
