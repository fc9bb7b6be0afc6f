//! Minimum-redundancy maximum-relevance ranking with F-statistic relevance
//! and absolute Pearson redundancy.

use serde::{Deserialize, Serialize};

/// Redundancy floor for the quotient form.
const MIN_REDUNDANCY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MrmrForm {
    /// Relevance on the correlation scale, `sqrt(F / (F + n - 2))`, minus mean redundancy.
    #[default]
    Difference,
    /// Raw F divided by mean redundancy.
    Quotient,
}

/// One-way ANOVA F statistic of a feature against a binary label.
pub fn f_statistic(x: &[f64], y: &[u8]) -> f64 {
    let n = x.len() as f64;
    let mut sum = [0.0; 2];
    let mut count = [0.0; 2];
    for (v, &l) in x.iter().zip(y) {
        sum[l as usize] += v;
        count[l as usize] += 1.0;
    }
    if count[0] == 0.0 || count[1] == 0.0 || n <= 2.0 {
        return 0.0;
    }
    let grand = (sum[0] + sum[1]) / n;
    let means = [sum[0] / count[0], sum[1] / count[1]];
    let between: f64 = (0..2).map(|c| count[c] * (means[c] - grand).powi(2)).sum();
    let within: f64 = x.iter().zip(y).map(|(v, &l)| (v - means[l as usize]).powi(2)).sum();
    if within <= 0.0 {
        return if between > 0.0 { f64::MAX } else { 0.0 };
    }
    between / (within / (n - 2.0))
}

/// Map an F statistic with `n` samples onto the |point-biserial r| scale.
pub fn f_to_correlation(f: f64, n: usize) -> f64 {
    let dof = n.saturating_sub(2) as f64;
    if f >= f64::MAX {
        return 1.0;
    }
    if f + dof <= 0.0 { 0.0 } else { (f / (f + dof)).sqrt() }
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Greedy forward selection of `k` column indices from row-major `x`.
/// The first pick is the most relevant column; ties go to the lower index.
pub fn mrmr_select(x: &[Vec<f64>], y: &[u8], k: usize, form: MrmrForm) -> Vec<usize> {
    let d = x.first().map_or(0, Vec::len);
    let k = k.min(d);
    let columns: Vec<Vec<f64>> = (0..d).map(|j| x.iter().map(|r| r[j]).collect()).collect();
    let relevance: Vec<f64> = columns.iter().map(|c| f_statistic(c, y)).collect();
    let mut redundancy_sum = vec![0.0; d];
    let mut chosen = vec![false; d];
    let mut selected = Vec::with_capacity(k);
    while selected.len() < k {
        let m = selected.len() as f64;
        let mut best: Option<(usize, f64)> = None;
        for j in (0..d).filter(|&j| !chosen[j]) {
            let score = if m == 0.0 {
                relevance[j]
            } else {
                let red = redundancy_sum[j] / m;
                match form {
                    MrmrForm::Quotient => relevance[j] / red.max(MIN_REDUNDANCY),
                    MrmrForm::Difference => f_to_correlation(relevance[j], x.len()) - red,
                }
            };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((pick, _)) = best else { break };
        chosen[pick] = true;
        selected.push(pick);
        for j in (0..d).filter(|&j| !chosen[j]) {
            redundancy_sum[j] += pearson(&columns[j], &columns[pick]).abs();
        }
    }
    selected
}
