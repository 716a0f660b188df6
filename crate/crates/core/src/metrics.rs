//! Prediction-quality and throughput metrics over a complete (plan x DOP)
//! grid of actual and predicted latencies.
//!
//! | metric | definition |
//! |--------|------------|
//! | MAE | mean over plans and DOPs of `|t_hat - t|` |
//! | RPE(P) | mean over DOPs of `|t_hat - t| / t` |
//! | SPE(P) | mean over DOPs of `|t_hat_d / t_hat_1 - t_d / t_1|` |
//! | TQ | `|W| / sum_i min_d t_hat` |
//! | TW | `|W| / min_d sum_i t_hat` |
//!
//! TQ and TW use predicted latencies. The `realized_*` variants charge the
//! actual latency at the DOP a model would choose, and `oracle_*` apply the
//! formulas to actual latencies (the best achievable).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::selection::argmin_dop;

/// Cumulative RPE thresholds used in distribution reports.
pub const RPE_THRESHOLDS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
/// Cumulative SPE thresholds used in distribution reports.
pub const SPE_THRESHOLDS: [f64; 5] = [0.001, 0.005, 0.01, 0.05, 0.1];

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("grid is incomplete: plan {plan} has no entry at DOP {dop}")]
    IncompleteGrid { plan: String, dop: u32 },
    #[error("grid has no plans")]
    EmptyGrid,
    #[error("unknown plan {0}")]
    UnknownPlan(String),
    #[error("DOP set does not contain the baseline DOP 1")]
    MissingBaselineDop,
    #[error("predicted latency of plan {0} at DOP 1 is zero")]
    PredictedBaselineZero(String),
    #[error("no values to summarize")]
    EmptyValues,
    #[error("thresholds must be sorted ascending")]
    UnsortedThresholds,
    #[error("invalid entry for plan {plan} at DOP {dop}: {reason}")]
    InvalidEntry { plan: String, dop: u32, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub actual_ms: f64,
    pub predicted_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LatencyTable {
    dop_set: Vec<u32>,
    rows: BTreeMap<String, BTreeMap<u32, Cell>>,
}

impl LatencyTable {
    pub fn new(dop_set: &[u32]) -> Self {
        let mut dop_set = dop_set.to_vec();
        dop_set.sort_unstable();
        dop_set.dedup();
        LatencyTable { dop_set, rows: BTreeMap::new() }
    }

    pub fn insert(&mut self, plan_id: &str, dop: u32, actual_ms: f64, predicted_ms: f64) -> Result<(), MetricsError> {
        let invalid =
            |reason: &str| MetricsError::InvalidEntry { plan: plan_id.to_string(), dop, reason: reason.to_string() };
        if self.dop_set.binary_search(&dop).is_err() {
            return Err(invalid("DOP outside the table's DOP set"));
        }
        if !(actual_ms > 0.0 && actual_ms.is_finite()) {
            return Err(invalid("actual latency must be positive"));
        }
        if !(predicted_ms >= 0.0 && predicted_ms.is_finite()) {
            return Err(invalid("predicted latency must be non-negative"));
        }
        self.rows.entry(plan_id.to_string()).or_default().insert(dop, Cell { actual_ms, predicted_ms });
        Ok(())
    }

    pub fn dop_set(&self) -> &[u32] {
        &self.dop_set
    }

    pub fn plan_ids(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn n_plans(&self) -> usize {
        self.rows.len()
    }

    pub fn cell(&self, plan_id: &str, dop: u32) -> Option<Cell> {
        self.rows.get(plan_id)?.get(&dop).copied()
    }

    pub fn check_complete(&self) -> Result<(), MetricsError> {
        if self.rows.is_empty() {
            return Err(MetricsError::EmptyGrid);
        }
        for (plan, row) in &self.rows {
            if let Some(&dop) = self.dop_set.iter().find(|d| !row.contains_key(d)) {
                return Err(MetricsError::IncompleteGrid { plan: plan.clone(), dop });
            }
        }
        Ok(())
    }

    fn row(&self, plan_id: &str) -> Result<&BTreeMap<u32, Cell>, MetricsError> {
        let row = self.rows.get(plan_id).ok_or_else(|| MetricsError::UnknownPlan(plan_id.to_string()))?;
        if let Some(&dop) = self.dop_set.iter().find(|d| !row.contains_key(d)) {
            return Err(MetricsError::IncompleteGrid { plan: plan_id.to_string(), dop });
        }
        Ok(row)
    }

    pub fn predicted_row(&self, plan_id: &str) -> Option<BTreeMap<u32, f64>> {
        Some(self.rows.get(plan_id)?.iter().map(|(d, c)| (*d, c.predicted_ms)).collect())
    }

    pub fn actual_row(&self, plan_id: &str) -> Option<BTreeMap<u32, f64>> {
        Some(self.rows.get(plan_id)?.iter().map(|(d, c)| (*d, c.actual_ms)).collect())
    }
}

pub fn mae(table: &LatencyTable) -> Result<f64, MetricsError> {
    table.check_complete()?;
    let mut sum = 0.0;
    for row in table.rows.values() {
        for c in row.values() {
            sum += (c.predicted_ms - c.actual_ms).abs();
        }
    }
    Ok(sum / (table.rows.len() * table.dop_set.len()) as f64)
}

pub fn rpe(table: &LatencyTable, plan_id: &str) -> Result<f64, MetricsError> {
    let row = table.row(plan_id)?;
    let sum: f64 = row.values().map(|c| (c.predicted_ms - c.actual_ms).abs() / c.actual_ms).sum();
    Ok(sum / row.len() as f64)
}

pub fn spe(table: &LatencyTable, plan_id: &str) -> Result<f64, MetricsError> {
    if table.dop_set.first() != Some(&1) {
        return Err(MetricsError::MissingBaselineDop);
    }
    let row = table.row(plan_id)?;
    let base = row[&1];
    if base.predicted_ms == 0.0 {
        return Err(MetricsError::PredictedBaselineZero(plan_id.to_string()));
    }
    let sum: f64 =
        row.values().map(|c| (c.predicted_ms / base.predicted_ms - c.actual_ms / base.actual_ms).abs()).sum();
    Ok(sum / row.len() as f64)
}

fn per_plan(
    table: &LatencyTable,
    f: fn(&LatencyTable, &str) -> Result<f64, MetricsError>,
) -> Result<Vec<f64>, MetricsError> {
    table.check_complete()?;
    table.rows.keys().map(|p| f(table, p)).collect()
}

/// RPE of every plan, in plan-id order.
pub fn rpe_all(table: &LatencyTable) -> Result<Vec<f64>, MetricsError> {
    per_plan(table, rpe)
}

/// SPE of every plan, in plan-id order.
pub fn spe_all(table: &LatencyTable) -> Result<Vec<f64>, MetricsError> {
    per_plan(table, spe)
}

fn per_query_throughput(
    table: &LatencyTable,
    choose: impl Fn(&BTreeMap<u32, Cell>) -> f64,
) -> Result<f64, MetricsError> {
    table.check_complete()?;
    let total: f64 = table.rows.values().map(choose).sum();
    Ok(table.rows.len() as f64 / total)
}

fn workload_throughput(
    table: &LatencyTable,
    rank: impl Fn(&Cell) -> f64,
    charge: impl Fn(&Cell) -> f64,
) -> Result<f64, MetricsError> {
    table.check_complete()?;
    let sums: Vec<(u32, f64)> =
        table.dop_set.iter().map(|d| (*d, table.rows.values().map(|row| rank(&row[d])).sum())).collect();
    let chosen = argmin_dop(sums.iter().copied()).expect("DOP set is non-empty");
    let total: f64 = table.rows.values().map(|row| charge(&row[&chosen])).sum();
    Ok(table.rows.len() as f64 / total)
}

fn chosen_cell(row: &BTreeMap<u32, Cell>, key: impl Fn(&Cell) -> f64) -> Cell {
    let dop = argmin_dop(row.iter().map(|(d, c)| (*d, key(c)))).expect("rows are non-empty");
    row[&dop]
}

/// Throughput with per-query DOP, on predicted latencies.
pub fn tq(table: &LatencyTable) -> Result<f64, MetricsError> {
    per_query_throughput(table, |row| chosen_cell(row, |c| c.predicted_ms).predicted_ms)
}

/// Throughput with one workload-wide DOP, on predicted latencies.
pub fn tw(table: &LatencyTable) -> Result<f64, MetricsError> {
    workload_throughput(table, |c| c.predicted_ms, |c| c.predicted_ms)
}

/// Actual throughput when each query runs at its predicted-best DOP.
pub fn realized_tq(table: &LatencyTable) -> Result<f64, MetricsError> {
    per_query_throughput(table, |row| chosen_cell(row, |c| c.predicted_ms).actual_ms)
}

/// Actual throughput at the workload DOP chosen from predictions.
pub fn realized_tw(table: &LatencyTable) -> Result<f64, MetricsError> {
    workload_throughput(table, |c| c.predicted_ms, |c| c.actual_ms)
}

/// Best achievable per-query throughput (every query at its true best DOP).
pub fn oracle_tq(table: &LatencyTable) -> Result<f64, MetricsError> {
    per_query_throughput(table, |row| chosen_cell(row, |c| c.actual_ms).actual_ms)
}

/// Best achievable throughput with a single workload DOP.
pub fn oracle_tw(table: &LatencyTable) -> Result<f64, MetricsError> {
    workload_throughput(table, |c| c.actual_ms, |c| c.actual_ms)
}

/// Cumulative percentage of `values` at or below each threshold.
pub fn error_distribution(values: &[f64], thresholds: &[f64]) -> Result<Vec<f64>, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyValues);
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(MetricsError::UnsortedThresholds);
    }
    let n = values.len() as f64;
    Ok(thresholds.iter().map(|t| values.iter().filter(|v| **v <= *t).count() as f64 * 100.0 / n).collect())
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 { sorted[mid] } else { (sorted[mid - 1] + sorted[mid]) / 2.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub thresholds: Vec<f64>,
    pub percent: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_plans: usize,
    pub mae: f64,
    pub rpe_mean: f64,
    pub rpe_median: f64,
    /// `None` when the DOP set lacks DOP 1.
    pub spe_mean: Option<f64>,
    pub spe_median: Option<f64>,
    pub tq: f64,
    pub tw: f64,
    pub realized_tq: f64,
    pub realized_tw: f64,
    pub oracle_tq: f64,
    pub oracle_tw: f64,
    pub rpe_distribution: Distribution,
    pub spe_distribution: Option<Distribution>,
}

impl MetricsReport {
    pub fn compute(table: &LatencyTable) -> Result<Self, MetricsError> {
        let rpes = rpe_all(table)?;
        let spes = match spe_all(table) {
            Ok(v) => Some(v),
            Err(MetricsError::MissingBaselineDop | MetricsError::PredictedBaselineZero(_)) => None,
            Err(e) => return Err(e),
        };
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        Ok(MetricsReport {
            n_plans: table.n_plans(),
            mae: mae(table)?,
            rpe_mean: mean(&rpes),
            rpe_median: median(&rpes).expect("grid is non-empty"),
            spe_mean: spes.as_deref().map(mean),
            spe_median: spes.as_deref().and_then(median),
            tq: tq(table)?,
            tw: tw(table)?,
            realized_tq: realized_tq(table)?,
            realized_tw: realized_tw(table)?,
            oracle_tq: oracle_tq(table)?,
            oracle_tw: oracle_tw(table)?,
            rpe_distribution: Distribution {
                thresholds: RPE_THRESHOLDS.to_vec(),
                percent: error_distribution(&rpes, &RPE_THRESHOLDS)?,
            },
            spe_distribution: match &spes {
                Some(v) => Some(Distribution {
                    thresholds: SPE_THRESHOLDS.to_vec(),
                    percent: error_distribution(v, &SPE_THRESHOLDS)?,
                }),
                None => None,
            },
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Column names of [`MetricsReport::csv_values`].
    pub fn csv_header() -> Vec<String> {
        let mut cols: Vec<String> = [
            "n_plans",
            "mae",
            "rpe_mean",
            "rpe_median",
            "spe_mean",
            "spe_median",
            "tq",
            "tw",
            "realized_tq",
            "realized_tw",
            "oracle_tq",
            "oracle_tw",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        cols.extend(RPE_THRESHOLDS.iter().map(|t| format!("rpe_le_{t}")));
        cols.extend(SPE_THRESHOLDS.iter().map(|t| format!("spe_le_{t}")));
        cols
    }

    pub fn csv_values(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut vals = vec![
            self.n_plans.to_string(),
            self.mae.to_string(),
            self.rpe_mean.to_string(),
            self.rpe_median.to_string(),
            opt(self.spe_mean),
            opt(self.spe_median),
            self.tq.to_string(),
            self.tw.to_string(),
            self.realized_tq.to_string(),
            self.realized_tw.to_string(),
            self.oracle_tq.to_string(),
            self.oracle_tw.to_string(),
        ];
        vals.extend(self.rpe_distribution.percent.iter().map(|p| p.to_string()));
        match &self.spe_distribution {
            Some(d) => vals.extend(d.percent.iter().map(|p| p.to_string())),
            None => vals.extend(SPE_THRESHOLDS.iter().map(|_| String::new())),
        }
        vals
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(Self::csv_header()).expect("in-memory csv");
        writer.write_record(self.csv_values()).expect("in-memory csv");
        String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(dops: &[u32], rows: &[(&str, &[f64], &[f64])]) -> LatencyTable {
        let mut t = LatencyTable::new(dops);
        for (plan, actual, predicted) in rows {
            for (i, d) in dops.iter().enumerate() {
                t.insert(plan, *d, actual[i], predicted[i]).unwrap();
            }
        }
        t
    }

    #[test]
    fn perfect_prediction_scores_zero() {
        let t = table(
            &[1, 2, 4],
            &[("a", &[10.0, 6.0, 5.0], &[10.0, 6.0, 5.0]), ("b", &[3.0, 2.0, 4.0], &[3.0, 2.0, 4.0])],
        );
        assert_eq!(mae(&t).unwrap(), 0.0);
        assert_eq!(rpe(&t, "a").unwrap(), 0.0);
        assert_eq!(spe(&t, "b").unwrap(), 0.0);
        assert_eq!(realized_tq(&t).unwrap(), oracle_tq(&t).unwrap());
    }

    #[test]
    fn incomplete_and_unknown() {
        let mut t = LatencyTable::new(&[1, 2]);
        t.insert("a", 1, 10.0, 10.0).unwrap();
        assert_eq!(mae(&t), Err(MetricsError::IncompleteGrid { plan: "a".into(), dop: 2 }));
        assert_eq!(rpe(&t, "zzz"), Err(MetricsError::UnknownPlan("zzz".into())));
        assert!(t.insert("a", 3, 1.0, 1.0).is_err());
        assert!(t.insert("a", 2, 0.0, 1.0).is_err());
        assert!(t.insert("a", 2, 1.0, -1.0).is_err());
        assert_eq!(mae(&LatencyTable::new(&[1])), Err(MetricsError::EmptyGrid));
    }

    #[test]
    fn spe_errors() {
        let t = table(&[2, 4], &[("a", &[10.0, 5.0], &[10.0, 5.0])]);
        assert_eq!(spe(&t, "a"), Err(MetricsError::MissingBaselineDop));
        let z = table(&[1, 2], &[("a", &[10.0, 5.0], &[0.0, 5.0])]);
        assert_eq!(spe(&z, "a"), Err(MetricsError::PredictedBaselineZero("a".into())));
    }

    #[test]
    fn uniform_relative_error() {
        let t = table(&[1, 2, 4], &[("a", &[10.0, 6.0, 5.0], &[20.0, 12.0, 10.0])]);
        assert_eq!(rpe(&t, "a").unwrap(), 1.0);
        assert_eq!(spe(&t, "a").unwrap(), 0.0);
    }

    #[test]
    fn constant_predictions() {
        let t = table(&[1, 2], &[("a", &[1.0, 2.0], &[5.0, 5.0]), ("b", &[3.0, 1.0], &[5.0, 5.0])]);
        assert_eq!(tq(&t).unwrap(), 2.0 / (2.0 * 5.0));
        assert_eq!(tw(&t).unwrap(), tq(&t).unwrap());
        let single = table(&[1, 2], &[("a", &[1.0, 2.0], &[5.0, 3.0])]);
        assert_eq!(tq(&single).unwrap(), tw(&single).unwrap());
    }

    #[test]
    fn realized_vs_oracle() {
        // Predictions prefer DOP 2 for both plans; truth prefers DOP 1 for "a".
        let t = table(&[1, 2], &[("a", &[10.0, 20.0], &[9.0, 8.0]), ("b", &[10.0, 5.0], &[10.0, 5.0])]);
        assert_eq!(realized_tq(&t).unwrap(), 2.0 / 25.0);
        assert_eq!(oracle_tq(&t).unwrap(), 2.0 / 15.0);
        assert_eq!(realized_tw(&t).unwrap(), 2.0 / 25.0);
        assert_eq!(oracle_tw(&t).unwrap(), 2.0 / 20.0);
    }

    #[test]
    fn distribution_edges() {
        assert_eq!(error_distribution(&[0.0, 0.0], &[0.0, 0.5]).unwrap(), vec![100.0, 100.0]);
        assert_eq!(error_distribution(&[0.3, 0.4], &[0.1]).unwrap(), vec![0.0]);
        assert_eq!(error_distribution(&[], &[0.1]), Err(MetricsError::EmptyValues));
        assert_eq!(error_distribution(&[0.1], &[0.2, 0.1]), Err(MetricsError::UnsortedThresholds));
    }

    #[test]
    fn report_round_trip() {
        let t = table(&[1, 2], &[("a", &[10.0, 20.0], &[11.0, 18.0]), ("b", &[4.0, 2.0], &[4.0, 3.0])]);
        let r = MetricsReport::compute(&t).unwrap();
        assert_eq!(serde_json::from_str::<MetricsReport>(&r.to_json()).unwrap(), r);
        let csv = r.to_csv();
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with("n_plans,mae,rpe_mean"));
        assert_eq!(header.split(',').count(), csv.lines().nth(1).unwrap().split(',').count());
        let no_baseline = table(&[2, 4], &[("a", &[10.0, 20.0], &[11.0, 18.0])]);
        assert!(MetricsReport::compute(&no_baseline).unwrap().spe_mean.is_none());
    }
}
