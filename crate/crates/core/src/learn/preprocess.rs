//! Median imputation and standardization, fitted on training rows only.

use serde::{Deserialize, Serialize};

use crate::dsp;

/// Replaces missing values with the training median of each column.
/// Columns with no training value are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianImputer {
    kept: Vec<usize>,
    medians: Vec<f64>,
    n_input: usize,
}

impl MedianImputer {
    pub fn fit(rows: &[Vec<Option<f64>>]) -> Self {
        let n_input = rows.first().map_or(0, Vec::len);
        let mut kept = Vec::new();
        let mut medians = Vec::new();
        for j in 0..n_input {
            let present: Vec<f64> = rows.iter().filter_map(|r| r[j]).filter(|v| v.is_finite()).collect();
            if present.is_empty() {
                log::warn!("column {j} has no training values; dropped");
                continue;
            }
            kept.push(j);
            medians.push(dsp::median(&present));
        }
        Self { kept, medians, n_input }
    }

    /// Input column indices that survive, in output order.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn medians(&self) -> &[f64] {
        &self.medians
    }

    pub fn dropped(&self) -> Vec<usize> {
        (0..self.n_input).filter(|j| !self.kept.contains(j)).collect()
    }

    pub fn transform(&self, rows: &[Vec<Option<f64>>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                self.kept
                    .iter()
                    .zip(&self.medians)
                    .map(|(&j, &m)| r[j].filter(|v| v.is_finite()).unwrap_or(m))
                    .collect()
            })
            .collect()
    }
}

/// `(x − mean) / std` with training mean and population std; a constant
/// training column maps to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        for j in 0..d {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            mean[j] = m;
            std[j] = var.sqrt();
        }
        Self { mean, std }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .zip(self.mean.iter().zip(&self.std))
                    .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}
