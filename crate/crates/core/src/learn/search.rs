//! Sequential model-based search: a rotated Halton start-up design followed
//! by tree-structured Parzen estimator proposals.
//!
//! Points live in the unit cube; each [`Dim`] maps a coordinate to a value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::LearnError;

pub const MIN_BUDGET: usize = 10;
/// Share of observations treated as "good".
const GAMMA: f64 = 0.25;
const CANDIDATES: usize = 24;
const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Dim {
    /// Integer in `[lo, hi]`.
    Int { lo: i64, hi: i64 },
    Float { lo: f64, hi: f64 },
    /// One of `n` categories.
    Cat { n: usize },
}

impl Dim {
    pub fn decode(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0 - 1e-12);
        match *self {
            Dim::Int { lo, hi } => (lo + (u * (hi - lo + 1) as f64).floor() as i64) as f64,
            Dim::Float { lo, hi } => lo + u * (hi - lo),
            Dim::Cat { n } => (u * n as f64).floor(),
        }
    }
}

/// Radical inverse of `i` in `base`.
fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    /// Unit-cube coordinates.
    pub point: Vec<f64>,
    /// Decoded values, one per dimension.
    pub values: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Trial,
    pub history: Vec<Trial>,
}

fn log_gauss_mix(u: f64, centers: &[f64], sigma: f64) -> f64 {
    // Mixture of truncated-free Gaussians plus a uniform prior component.
    let k = centers.len() as f64 + 1.0;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let dens: f64 = centers.iter().map(|c| norm * (-0.5 * ((u - c) / sigma).powi(2)).exp()).sum::<f64>() + 1.0;
    (dens / k).ln()
}

fn bandwidth(centers: &[f64]) -> f64 {
    let n = centers.len() as f64;
    if n < 2.0 {
        return 0.25;
    }
    let m = centers.iter().sum::<f64>() / n;
    let sd = (centers.iter().map(|c| (c - m).powi(2)).sum::<f64>() / n).sqrt();
    (1.06 * sd * n.powf(-0.2)).clamp(0.05, 0.5)
}

fn cat_index(dim: &Dim, u: f64) -> usize {
    dim.decode(u) as usize
}

fn log_cat(dim: &Dim, u: f64, points: &[f64]) -> f64 {
    let Dim::Cat { n } = *dim else { unreachable!() };
    let c = cat_index(dim, u);
    let hits = points.iter().filter(|&&p| cat_index(dim, p) == c).count() as f64;
    ((hits + 1.0) / (points.len() as f64 + n as f64)).ln()
}

/// Maximize `objective` over `dims` with exactly `budget` evaluations.
/// Ties keep the earliest trial.
pub fn hyper_search<F>(dims: &[Dim], budget: usize, seed: u64, mut objective: F) -> Result<SearchResult, LearnError>
where
    F: FnMut(&[f64]) -> f64,
{
    if budget < MIN_BUDGET {
        return Err(LearnError::BudgetTooSmall(budget));
    }
    assert!(dims.len() <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = dims.iter().map(|_| rng.random::<f64>()).collect();
    let startup = budget.div_ceil(3);
    let mut history: Vec<Trial> = Vec::with_capacity(budget);

    let mut evaluate = |point: Vec<f64>, history: &mut Vec<Trial>| {
        let values: Vec<f64> = dims.iter().zip(&point).map(|(d, &u)| d.decode(u)).collect();
        let score = objective(&values);
        history.push(Trial { point, values, score });
    };

    for i in 0..startup {
        let point = (0..dims.len())
            .map(|d| (halton(i as u64 + 1, PRIMES[d]) + shift[d]).fract())
            .collect();
        evaluate(point, &mut history);
    }

    while history.len() < budget {
        let mut order: Vec<usize> = (0..history.len()).collect();
        // Stable: equal scores keep evaluation order.
        order.sort_by(|&a, &b| history[b].score.total_cmp(&history[a].score));
        let n_good = ((GAMMA * history.len() as f64).ceil() as usize).max(1);
        let (good, bad) = order.split_at(n_good);
        let coords = |set: &[usize], d: usize| -> Vec<f64> { set.iter().map(|&i| history[i].point[d]).collect() };

        let mut best: Option<(Vec<f64>, f64)> = None;
        for _ in 0..CANDIDATES {
            let mut point = Vec::with_capacity(dims.len());
            let mut score = 0.0;
            for (d, dim) in dims.iter().enumerate() {
                let g_pts = coords(good, d);
                let b_pts = coords(bad, d);
                let u = match dim {
                    Dim::Cat { n } => {
                        // Sample a category from the smoothed good histogram.
                        let weights: Vec<f64> = (0..*n)
                            .map(|c| g_pts.iter().filter(|&&p| cat_index(dim, p) == c).count() as f64 + 1.0)
                            .collect();
                        let total: f64 = weights.iter().sum();
                        let mut r = rng.random::<f64>() * total;
                        let mut c = 0;
                        while c + 1 < *n && r >= weights[c] {
                            r -= weights[c];
                            c += 1;
                        }
                        (c as f64 + 0.5) / *n as f64
                    }
                    _ => {
                        let sigma = bandwidth(&g_pts);
                        let center = if rng.random::<f64>() < 1.0 / (g_pts.len() as f64 + 1.0) {
                            rng.random::<f64>()
                        } else {
                            g_pts[rng.random_range(0..g_pts.len())]
                        };
                        let noise: f64 = Normal::new(0.0, sigma).expect("positive sigma").sample(&mut rng);
                        let mut v = center + noise;
                        // Reflect into the unit interval.
                        v = v.abs();
                        if v > 1.0 {
                            v = (2.0 - v).max(0.0);
                        }
                        v.min(1.0 - 1e-12)
                    }
                };
                score += match dim {
                    Dim::Cat { .. } => log_cat(dim, u, &g_pts) - log_cat(dim, u, &b_pts),
                    _ => log_gauss_mix(u, &g_pts, bandwidth(&g_pts)) - log_gauss_mix(u, &b_pts, bandwidth(&b_pts)),
                };
                point.push(u);
            }
            if best.as_ref().is_none_or(|(_, s)| score > *s) {
                best = Some((point, score));
            }
        }
        let (point, _) = best.expect("at least one candidate");
        evaluate(point, &mut history);
    }

    let mut best = 0;
    for (i, t) in history.iter().enumerate() {
        if t.score > history[best].score {
            best = i;
        }
    }
    Ok(SearchResult {
        best: history[best].clone(),
        history,
    })
}
