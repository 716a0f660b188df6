//! Elastic-net linear regression fit by cyclic coordinate descent on
//! z-scored features.
//!
//! Objective (standardized space):
//! `1/(2n) * ||y - b - Zw||^2 + alpha * (rho * ||w||_1 + (1 - rho)/2 * ||w||_2^2)`.

use serde::{Deserialize, Serialize};

use super::tree::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticNetParams {
    pub alpha: f64,
    pub l1_ratio: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        ElasticNetParams { alpha: 0.1, l1_ratio: 0.5, tol: 1e-6, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Coefficients on the z-scored features.
    pub weights: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub model: LinearModel,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after every sweep.
    pub objective_trace: Vec<f64>,
}

impl LinearModel {
    /// A model over raw (unscaled) features.
    pub fn from_raw(coefficients: Vec<f64>, intercept: f64) -> Self {
        let n = coefficients.len();
        LinearModel { means: vec![0.0; n], scales: vec![1.0; n], weights: coefficients, intercept }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut acc = self.intercept;
        for (j, w) in self.weights.iter().enumerate() {
            if *w != 0.0 {
                acc += w * (x[j] - self.means[j]) / self.scales[j];
            }
        }
        acc
    }

    /// Coefficients in the original feature units.
    pub fn coefficients(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.scales).map(|(w, s)| w / s).collect()
    }

    /// Intercept in the original feature units.
    pub fn raw_intercept(&self) -> f64 {
        let coefs = self.coefficients();
        self.intercept - coefs.iter().zip(&self.means).map(|(c, m)| c * m).sum::<f64>()
    }

    pub fn validate(&self, n_features: usize) -> Result<(), String> {
        if self.means.len() != n_features || self.scales.len() != n_features || self.weights.len() != n_features {
            return Err(format!("linear model does not have {n_features} coefficients"));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.means) || !finite(&self.weights) || !self.intercept.is_finite() {
            return Err("non-finite linear parameters".into());
        }
        if self.scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err("feature scales must be positive".into());
        }
        Ok(())
    }
}

fn soft_threshold(value: f64, threshold: f64) -> f64 {
    if value > threshold {
        value - threshold
    } else if value < -threshold {
        value + threshold
    } else {
        0.0
    }
}

pub fn objective(residuals: &[f64], weights: &[f64], params: &ElasticNetParams) -> f64 {
    let n = residuals.len() as f64;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let l1: f64 = weights.iter().map(|w| w.abs()).sum();
    let l2: f64 = weights.iter().map(|w| w * w).sum();
    rss / (2.0 * n) + params.alpha * (params.l1_ratio * l1 + (1.0 - params.l1_ratio) / 2.0 * l2)
}

pub fn fit_elastic_net(x: &Matrix, y: &[f64], params: &ElasticNetParams) -> LinearFit {
    let n = x.n_rows();
    let p = x.n_cols();
    let nf = n as f64;

    let mut means = vec![0.0; p];
    let mut scales = vec![1.0; p];
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / nf;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        let std = var.sqrt();
        means[j] = mean;
        if std > 0.0 && std.is_finite() {
            scales[j] = std;
            z.push(col.iter().map(|v| (v - mean) / std).collect());
        } else {
            z.push(vec![0.0; n]);
        }
    }
    let norms: Vec<f64> = z.iter().map(|col| col.iter().map(|v| v * v).sum::<f64>() / nf).collect();

    let y_mean = y.iter().sum::<f64>() / nf;
    let mut residuals: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut weights = vec![0.0; p];
    let l1 = params.alpha * params.l1_ratio;
    let l2 = params.alpha * (1.0 - params.l1_ratio);

    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < params.max_iter {
        sweeps += 1;
        let mut max_delta: f64 = 0.0;
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let col = &z[j];
            let old = weights[j];
            let rho = col.iter().zip(&residuals).map(|(a, r)| a * r).sum::<f64>() / nf + norms[j] * old;
            let new = soft_threshold(rho, l1) / (norms[j] + l2);
            let delta = new - old;
            if delta != 0.0 {
                for (r, a) in residuals.iter_mut().zip(col) {
                    *r -= a * delta;
                }
                weights[j] = new;
            }
            max_delta = max_delta.max(delta.abs());
        }
        trace.push(objective(&residuals, &weights, params));
        if max_delta < params.tol {
            converged = true;
            break;
        }
    }

    LinearFit {
        model: LinearModel { means, scales, weights, intercept: y_mean },
        sweeps,
        converged,
        objective_trace: trace,
    }
}
