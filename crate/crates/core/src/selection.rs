//! DOP selection from predicted latency rows, and speedup/costup curves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{attach_dop, FeatureVector};
use crate::models::{Model, ModelError};

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("DOP set is empty")]
    EmptyDopSet,
    #[error("workload has no plans")]
    EmptyWorkload,
    #[error("invalid DOP {0}")]
    InvalidDop(u32),
    #[error("baseline DOP {0} is missing from the latency row")]
    MissingBaseline(u32),
    #[error("latency at DOP {dop} must be positive, got {value}")]
    NonPositiveLatency { dop: u32, value: f64 },
    #[error("no provisioned core count for DOP {0}")]
    MissingCores(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Anything that maps a plan vector with its DOP slot set to a latency.
pub trait LatencyPredictor {
    fn predict_latency(&self, x: &FeatureVector) -> Result<f64, ModelError>;
}

impl LatencyPredictor for Model {
    fn predict_latency(&self, x: &FeatureVector) -> Result<f64, ModelError> {
        self.predict(x)
    }
}

/// DOP with the smallest value; ties go to the smallest DOP.
pub fn argmin_dop(row: impl IntoIterator<Item = (u32, f64)>) -> Option<u32> {
    let mut best: Option<(u32, f64)> = None;
    for (dop, v) in row {
        best = match best {
            Some((bd, bv)) if v > bv || (v == bv && dop > bd) => Some((bd, bv)),
            _ => Some((dop, v)),
        };
    }
    best.map(|(d, _)| d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopRecommendation {
    /// Plan id, or a workload label.
    pub target: String,
    pub chosen_dop: u32,
    pub predicted_ms_at_choice: f64,
    pub predicted_row: BTreeMap<u32, f64>,
}

impl DopRecommendation {
    /// Chooses from an already-predicted row.
    pub fn from_row(target: impl Into<String>, row: BTreeMap<u32, f64>) -> Result<Self, SelectionError> {
        let chosen_dop = argmin_dop(row.iter().map(|(d, v)| (*d, *v))).ok_or(SelectionError::EmptyDopSet)?;
        Ok(DopRecommendation {
            target: target.into(),
            chosen_dop,
            predicted_ms_at_choice: row[&chosen_dop],
            predicted_row: row,
        })
    }
}

/// Predicted latency of one plan at every DOP in `dop_set`.
pub fn predicted_row<P: LatencyPredictor + ?Sized>(
    model: &P,
    features: &FeatureVector,
    dop_set: &[u32],
) -> Result<BTreeMap<u32, f64>, SelectionError> {
    if dop_set.is_empty() {
        return Err(SelectionError::EmptyDopSet);
    }
    let mut row = BTreeMap::new();
    for &dop in dop_set {
        let x = attach_dop(features, dop).map_err(|_| SelectionError::InvalidDop(dop))?;
        row.insert(dop, model.predict_latency(&x)?);
    }
    Ok(row)
}

pub fn select_per_query<P: LatencyPredictor + ?Sized>(
    model: &P,
    plan_id: &str,
    features: &FeatureVector,
    dop_set: &[u32],
) -> Result<DopRecommendation, SelectionError> {
    DopRecommendation::from_row(plan_id, predicted_row(model, features, dop_set)?)
}

/// One shared DOP minimizing the summed predicted latency over `plans`.
pub fn select_workload<P: LatencyPredictor + ?Sized>(
    model: &P,
    plans: &[(String, FeatureVector)],
    dop_set: &[u32],
    label: &str,
) -> Result<DopRecommendation, SelectionError> {
    let rows = plans.iter().map(|(_, f)| predicted_row(model, f, dop_set)).collect::<Result<Vec<_>, _>>()?;
    select_workload_rows(&rows, label)
}

pub fn select_workload_rows(rows: &[BTreeMap<u32, f64>], label: &str) -> Result<DopRecommendation, SelectionError> {
    let first = rows.first().ok_or(SelectionError::EmptyWorkload)?;
    let summed: BTreeMap<u32, f64> =
        first.keys().map(|d| (*d, rows.iter().map(|r| r.get(d).copied().unwrap_or(f64::INFINITY)).sum())).collect();
    DopRecommendation::from_row(label, summed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSource {
    Predicted,
    Actual,
}

impl CurveSource {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveSource::Predicted => "predicted",
            CurveSource::Actual => "actual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub dop: u32,
    pub speedup: f64,
    pub costup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupCurve {
    pub baseline_dop: u32,
    pub source: CurveSource,
    pub points: Vec<CurvePoint>,
}

/// Speedup `t(base)/t(d)` and costup `cores(d) t(d) / (cores(base) t(base))`.
/// Without a `cores` map a query at DOP `d` is charged `d` cores.
pub fn speedup_costup(
    row: &BTreeMap<u32, f64>,
    baseline_dop: u32,
    cores: Option<&BTreeMap<u32, f64>>,
    source: CurveSource,
) -> Result<SpeedupCurve, SelectionError> {
    let base = *row.get(&baseline_dop).ok_or(SelectionError::MissingBaseline(baseline_dop))?;
    let cores_at = |d: u32| -> Result<f64, SelectionError> {
        match cores {
            None => Ok(f64::from(d)),
            Some(map) => map.get(&d).copied().ok_or(SelectionError::MissingCores(d)),
        }
    };
    let base_cost = cores_at(baseline_dop)? * base;
    let mut points = Vec::with_capacity(row.len());
    for (&dop, &latency) in row {
        if !(latency > 0.0 && latency.is_finite()) {
            return Err(SelectionError::NonPositiveLatency { dop, value: latency });
        }
        points.push(CurvePoint { dop, speedup: base / latency, costup: cores_at(dop)? * latency / base_cost });
    }
    Ok(SpeedupCurve { baseline_dop, source, points })
}

/// CSV with columns `target,dop,speedup,costup,source`.
pub fn write_curves_csv(curves: &[(String, SpeedupCurve)]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["target", "dop", "speedup", "costup", "source"]).expect("in-memory csv");
    for (target, curve) in curves {
        for p in &curve.points {
            writer
                .write_record([
                    target.clone(),
                    p.dop.to_string(),
                    p.speedup.to_string(),
                    p.costup.to_string(),
                    curve.source.as_str().to_string(),
                ])
                .expect("in-memory csv");
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8")
}
