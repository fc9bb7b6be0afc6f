//! Heart-rate-variability features from one lead's RR series.
//!
//! Fragmentation features follow the usual convention: with increments
//! `d_i = rr_{i+1} - rr_i`, point `i` is an inflection when `d_{i-1} d_i <= 0`;
//! acceleration/deceleration segments are the runs of increments between
//! inflections, and alternation segments are runs where every consecutive
//! pair of increments flips sign.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp;
use crate::qrs::PeakList;

pub const HRV_FEATURES: [&str; 23] = [
    "AVNN",
    "SDNN",
    "RMSSD",
    "SEM",
    "PNN20",
    "PNN50",
    "minRR",
    "maxRR",
    "medHR",
    "maxHR",
    "PIP",
    "IALS",
    "PSS",
    "PAS",
    "PACEv",
    "SD1",
    "SD2",
    "SD1_SD2",
    "HTI",
    "TINN",
    "sq_map_quadratic",
    "sq_map_linear",
    "sq_map_intercept",
];

/// Physiological RR range in ms; intervals outside it are dropped.
pub const RR_RANGE_MS: (f64, f64) = (300.0, 2000.0);
pub const DEFAULT_MIN_INTERVALS: usize = 10;
/// Histogram bin width (1/128 s) for HTI and TINN.
pub const HIST_BIN_MS: f64 = 7.8125;

#[derive(Debug, Error, PartialEq)]
pub enum HrvError {
    #[error("need at least 2 beats, got {0}")]
    TooFewBeats(usize),
    #[error("RR series has {found} usable intervals, need {required}")]
    SeriesTooShort { found: usize, required: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrSeries {
    pub values: Vec<f64>,
    pub lead: String,
}

pub fn rr_from_peaks(peaks: &PeakList, lead: &str) -> Result<RrSeries, HrvError> {
    if peaks.len() < 2 {
        return Err(HrvError::TooFewBeats(peaks.len()));
    }
    let scale = 1000.0 / peaks.fs();
    let values = peaks
        .indices()
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 * scale)
        .collect();
    Ok(RrSeries {
        values,
        lead: lead.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HrvFeatures {
    /// Values in [`HRV_FEATURES`] order; `None` where undefined (e.g. SD1/SD2 with SD2 = 0).
    pub values: [Option<f64>; 23],
    /// The parabolic fit had rank < 3 and returned the minimum-norm solution.
    pub sq_map_rank_deficient: bool,
}

impl HrvFeatures {
    pub fn get(&self, name: &str) -> Option<f64> {
        HRV_FEATURES
            .iter()
            .position(|n| *n == name)
            .and_then(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, Option<f64>)> + '_ {
        HRV_FEATURES.iter().copied().zip(self.values.iter().copied())
    }
}

fn std_pop(x: &[f64]) -> f64 {
    let m = dsp::mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

fn std_sample(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = dsp::mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// Fragmentation features (PIP, IALS, PSS, PAS, PACEv) of an RR series.
pub fn fragmentation(rr: &[f64]) -> [f64; 5] {
    let n = rr.len();
    let d: Vec<f64> = rr.windows(2).map(|w| w[1] - w[0]).collect();
    let m = d.len();
    if m < 2 {
        return [0.0; 5];
    }
    let inflection: Vec<bool> = d.windows(2).map(|w| w[0] * w[1] <= 0.0).collect();
    let n_inflections = inflection.iter().filter(|&&b| b).count();
    let pip = n_inflections as f64 / n as f64;

    // Segment lengths in increments, split at inflection points.
    let mut segments = Vec::new();
    let mut len = 1;
    for &flip in &inflection {
        if flip {
            segments.push(len);
            len = 1;
        } else {
            len += 1;
        }
    }
    segments.push(len);
    let ials = segments.len() as f64 / m as f64;
    let pss = segments.iter().filter(|&&l| l < 3).sum::<usize>() as f64 / m as f64;

    let mut alternating = Vec::new();
    let mut run = 1;
    for w in d.windows(2) {
        if w[0] * w[1] < 0.0 {
            run += 1;
        } else {
            alternating.push(run);
            run = 1;
        }
    }
    alternating.push(run);
    let pas = alternating.iter().filter(|&&l| l >= 4).sum::<usize>() as f64 / m as f64;

    let energy: f64 = d.iter().map(|v| v * v).sum();
    let pacev = if energy > 0.0 {
        let signed: f64 = d
            .iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 0 { *v } else { -*v })
            .sum();
        signed * signed / (m as f64 * energy)
    } else {
        0.0
    };
    [pip, ials, pss, pas, pacev]
}

fn histogram(rr: &[f64]) -> (f64, Vec<usize>) {
    let lo = (rr.iter().copied().fold(f64::INFINITY, f64::min) / HIST_BIN_MS).floor() * HIST_BIN_MS;
    let mut counts = Vec::new();
    for v in rr {
        let b = ((v - lo) / HIST_BIN_MS).floor() as usize;
        if counts.len() <= b {
            counts.resize(b + 1, 0);
        }
        counts[b] += 1;
    }
    (lo, counts)
}

/// Triangular index: interval count over the tallest histogram bin.
pub fn hti(rr: &[f64]) -> f64 {
    let (_, counts) = histogram(rr);
    rr.len() as f64 / *counts.iter().max().unwrap_or(&1) as f64
}

/// Base width (ms) of the triangle that best fits the RR histogram in
/// least squares, apex at the modal bin.
pub fn tinn(rr: &[f64]) -> f64 {
    let (_, mut counts) = histogram(rr);
    // Pad one empty bin on each side so the triangle can close.
    counts.insert(0, 0);
    counts.push(0);
    let len = counts.len();
    let mode = dsp::argmax_by(
        &counts.iter().map(|&c| c as f64).collect::<Vec<_>>(),
        0,
        len,
        |v| v,
    )
    .unwrap_or(0);
    let peak = counts[mode] as f64;
    let mut best = (f64::INFINITY, 0usize, len - 1);
    for left in 0..=mode {
        for right in mode..len {
            let err: f64 = counts
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let q = if i == mode {
                        peak
                    } else if i <= left || i >= right {
                        0.0
                    } else if i < mode {
                        peak * (i - left) as f64 / (mode - left) as f64
                    } else {
                        peak * (right - i) as f64 / (right - mode) as f64
                    };
                    (c as f64 - q).powi(2)
                })
                .sum();
            if err < best.0 {
                best = (err, left, right);
            }
        }
    }
    (best.2 - best.1) as f64 * HIST_BIN_MS
}

/// Least-squares fit of `rr_{i+1}^2 = a rr_i^2 + b rr_i + c` (RR in seconds).
/// The minimum-norm solution comes from the eigendecomposition of the 3×3
/// Gram matrix. Returns `([a, b, c], rank_deficient)`.
pub fn sq_map(rr: &[f64]) -> ([f64; 3], bool) {
    let pairs = rr.len().saturating_sub(1);
    if pairs == 0 {
        return ([0.0; 3], true);
    }
    let x = DMatrix::from_fn(pairs, 3, |i, j| {
        let r = rr[i] / 1000.0;
        match j {
            0 => r * r,
            1 => r,
            _ => 1.0,
        }
    });
    let y = DVector::from_fn(pairs, |i, _| (rr[i + 1] / 1000.0).powi(2));
    let gram = x.tr_mul(&x);
    let rhs = x.tr_mul(&y);
    let eig = gram.symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let tol = lmax * 1e-12;
    let mut coef = DVector::<f64>::zeros(3);
    let mut rank = 0;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > tol {
            let v = eig.eigenvectors.column(k);
            coef += v * (v.dot(&rhs) / l);
            rank += 1;
        }
    }
    ([coef[0], coef[1], coef[2]], rank < 3)
}

/// All 23 features after dropping intervals outside [`RR_RANGE_MS`].
pub fn hrv_features(rr: &RrSeries, min_intervals: usize) -> Result<HrvFeatures, HrvError> {
    let rr: Vec<f64> = rr
        .values
        .iter()
        .copied()
        .filter(|v| (RR_RANGE_MS.0..=RR_RANGE_MS.1).contains(v))
        .collect();
    let required = min_intervals.max(2);
    if rr.len() < required {
        return Err(HrvError::SeriesTooShort {
            found: rr.len(),
            required,
        });
    }
    let n = rr.len() as f64;
    let d: Vec<f64> = rr.windows(2).map(|w| w[1] - w[0]).collect();
    let m = d.len() as f64;

    let avnn = dsp::mean(&rr);
    let sdnn = std_sample(&rr);
    let rmssd = (d.iter().map(|v| v * v).sum::<f64>() / m).sqrt();
    let sem = sdnn / n.sqrt();
    let pnn = |t: f64| d.iter().filter(|v| v.abs() > t).count() as f64 / m;
    let min_rr = rr.iter().copied().fold(f64::INFINITY, f64::min);
    let max_rr = rr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hr: Vec<f64> = rr.iter().map(|v| 60000.0 / v).collect();
    let med_hr = dsp::median(&hr);
    let max_hr = 60000.0 / min_rr;

    let [pip, ials, pss, pas, pacev] = fragmentation(&rr);

    let diffs: Vec<f64> = d.clone();
    let sums: Vec<f64> = rr.windows(2).map(|w| w[1] + w[0]).collect();
    let sd1 = std_pop(&diffs) / std::f64::consts::SQRT_2;
    let sd2 = std_pop(&sums) / std::f64::consts::SQRT_2;
    let ratio = (sd2 > 0.0).then(|| sd1 / sd2);

    let ([a, b, c], deficient) = sq_map(&rr);

    let values = [
        avnn,
        sdnn,
        rmssd,
        sem,
        pnn(20.0),
        pnn(50.0),
        min_rr,
        max_rr,
        med_hr,
        max_hr,
        pip,
        ials,
        pss,
        pas,
        pacev,
        sd1,
        sd2,
    ]
    .map(Some);
    let mut out = [None; 23];
    out[..17].copy_from_slice(&values);
    out[17] = ratio;
    out[18] = Some(hti(&rr));
    out[19] = Some(tinn(&rr));
    out[20] = Some(a);
    out[21] = Some(b);
    out[22] = Some(c);
    Ok(HrvFeatures {
        values: out,
        sq_map_rank_deficient: deficient,
    })
}
