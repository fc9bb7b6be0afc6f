//! Beat-agreement signal quality (bSQI) scanning and segment selection.
//!
//! A region is run through both detectors once per lead. Beats are matched
//! over the whole region, and each window then tallies the matched pairs
//! whose midpoint falls inside it plus the unmatched beats inside it. A beat
//! straddling a window edge therefore counts once, as a pair, instead of
//! being split into two spurious mismatches.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qrs::{self, matched_pairs, PeakList, QrsError};
use crate::recordio::{Recording, N_LEADS};

pub const DEFAULT_TOLERANCE_MS: f64 = 150.0;
pub const DEFAULT_OVERLAP_S: f64 = 5.0;
pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Error, PartialEq)]
pub enum QualityError {
    #[error("both peak lists are empty")]
    InsufficientBeats,
    #[error("region of {duration_s} s is shorter than the {window_s} s window")]
    RegionTooShort { duration_s: f64, window_s: f64 },
    #[error("invalid scan configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Detector(#[from] QrsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pre,
    Post,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Pre => "pre",
            Phase::Post => "post",
        })
    }
}

impl FromStr for Phase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pre" => Ok(Phase::Pre),
            "post" => Ok(Phase::Post),
            other => Err(format!("unknown phase {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSegment {
    pub patient_id: String,
    pub phase: Phase,
    pub start_s: f64,
    pub dur_s: f64,
    pub bsqi_mean: f64,
    pub per_lead_bsqi: [f64; 12],
}

/// `n_match / (n_a + n_b - n_match)`.
pub fn bsqi(a: &PeakList, b: &PeakList, tol_ms: f64) -> Result<f64, QualityError> {
    if a.is_empty() && b.is_empty() {
        return Err(QualityError::InsufficientBeats);
    }
    let m = qrs::match_peaks(a, b, tol_ms);
    Ok(m.n_match as f64 / (m.n_a + m.n_b - m.n_match) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Overlap between consecutive windows; the stride is `window - overlap`.
    pub overlap_s: f64,
    /// Explicit stride, overriding `overlap_s` when set.
    pub stride_s: Option<f64>,
    pub tolerance_ms: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            overlap_s: DEFAULT_OVERLAP_S,
            stride_s: None,
            tolerance_ms: DEFAULT_TOLERANCE_MS,
        }
    }
}

impl ScanConfig {
    pub fn stride_for(&self, window_s: f64) -> Result<f64, QualityError> {
        let stride = self.stride_s.unwrap_or(window_s - self.overlap_s);
        if stride > 0.0 && stride.is_finite() {
            Ok(stride)
        } else {
            Err(QualityError::InvalidConfig(format!(
                "window {window_s} s with overlap {} s leaves no stride",
                self.overlap_s
            )))
        }
    }
}

/// Per-lead beat agreement over a whole region, ready to be tallied per window.
#[derive(Debug, Clone)]
pub struct LeadAgreement {
    /// Midpoints (in samples, doubled to stay integral) of matched pairs.
    matched_mid2: Vec<usize>,
    unmatched: Vec<usize>,
}

impl LeadAgreement {
    pub fn new(a: &PeakList, b: &PeakList, tol_ms: f64) -> Self {
        let pairs = matched_pairs(a, b, tol_ms);
        let mut used_a = vec![false; a.len()];
        let mut used_b = vec![false; b.len()];
        let mut matched_mid2: Vec<usize> = pairs
            .iter()
            .map(|&(ia, ib)| {
                used_a[ia] = true;
                used_b[ib] = true;
                a.indices()[ia] + b.indices()[ib]
            })
            .collect();
        matched_mid2.sort_unstable();
        let mut unmatched: Vec<usize> = a
            .indices()
            .iter()
            .zip(&used_a)
            .chain(b.indices().iter().zip(&used_b))
            .filter(|(_, &u)| !u)
            .map(|(&i, _)| i)
            .collect();
        unmatched.sort_unstable();
        Self {
            matched_mid2,
            unmatched,
        }
    }

    /// bSQI for beats in `[start, end)`; 0 when neither detector fired.
    pub fn window_score(&self, start: usize, end: usize) -> f64 {
        let count = |v: &[usize], lo: usize, hi: usize| v.partition_point(|&x| x < hi) - v.partition_point(|&x| x < lo);
        let m = count(&self.matched_mid2, 2 * start, 2 * end);
        let u = count(&self.unmatched, start, end);
        if m + u == 0 {
            0.0
        } else {
            m as f64 / (m + u) as f64
        }
    }
}

/// Both detectors run on every lead of a region.
#[derive(Debug, Clone)]
pub struct RegionPeaks {
    pub fs: f64,
    pub n_samples: usize,
    pub energy: Vec<PeakList>,
    pub filterbank: Vec<PeakList>,
}

impl RegionPeaks {
    pub fn detect(region: &Recording) -> Result<Self, QualityError> {
        let mut energy = Vec::with_capacity(N_LEADS);
        let mut filterbank = Vec::with_capacity(N_LEADS);
        for lead in region.samples() {
            energy.push(qrs::detect_energy(lead, region.fs())?);
            filterbank.push(qrs::detect_filterbank(lead, region.fs())?);
        }
        Ok(Self {
            fs: region.fs(),
            n_samples: region.sample_count(),
            energy,
            filterbank,
        })
    }

    pub fn agreement(&self, tol_ms: f64) -> Vec<LeadAgreement> {
        self.energy
            .iter()
            .zip(&self.filterbank)
            .map(|(a, b)| LeadAgreement::new(a, b, tol_ms))
            .collect()
    }
}

/// Window start offsets (samples) for a region of `n` samples.
pub fn window_starts(n: usize, fs: f64, window_s: f64, stride_s: f64) -> Vec<usize> {
    let len = (window_s * fs).round() as usize;
    let stride = (stride_s * fs).round().max(1.0) as usize;
    if len > n {
        return Vec::new();
    }
    (0..=(n - len) / stride).map(|k| k * stride).collect()
}

/// Score every window of `window_s` seconds using precomputed detections.
/// `offset_s` is the region's start within the recording.
pub fn scan_peaks(
    peaks: &RegionPeaks,
    patient_id: &str,
    phase: Phase,
    offset_s: f64,
    window_s: f64,
    cfg: &ScanConfig,
) -> Result<Vec<ScoredSegment>, QualityError> {
    let duration_s = peaks.n_samples as f64 / peaks.fs;
    if duration_s + 1e-9 < window_s {
        return Err(QualityError::RegionTooShort { duration_s, window_s });
    }
    let stride_s = cfg.stride_for(window_s)?;
    let agreement = peaks.agreement(cfg.tolerance_ms);
    let len = (window_s * peaks.fs).round() as usize;
    Ok(window_starts(peaks.n_samples, peaks.fs, window_s, stride_s)
        .into_iter()
        .map(|start| {
            let mut per_lead = [0.0; 12];
            for (slot, lead) in per_lead.iter_mut().zip(&agreement) {
                *slot = lead.window_score(start, start + len);
            }
            ScoredSegment {
                patient_id: patient_id.to_string(),
                phase,
                start_s: offset_s + start as f64 / peaks.fs,
                dur_s: window_s,
                bsqi_mean: per_lead.iter().sum::<f64>() / N_LEADS as f64,
                per_lead_bsqi: per_lead,
            }
        })
        .collect())
}

/// Detect and score every window of a region.
pub fn scan(
    region: &Recording,
    phase: Phase,
    offset_s: f64,
    window_s: f64,
    cfg: &ScanConfig,
) -> Result<Vec<ScoredSegment>, QualityError> {
    if region.duration_s() + 1e-9 < window_s {
        return Err(QualityError::RegionTooShort {
            duration_s: region.duration_s(),
            window_s,
        });
    }
    let peaks = RegionPeaks::detect(region)?;
    scan_peaks(&peaks, region.patient_id(), phase, offset_s, window_s, cfg)
}

/// Score one stand-alone window by running both detectors on it directly.
pub fn score_window(window: &Recording, tol_ms: f64) -> Result<[f64; 12], QualityError> {
    let mut out = [0.0; 12];
    for (slot, lead) in out.iter_mut().zip(window.samples()) {
        let a = qrs::detect_energy(lead, window.fs())?;
        let b = qrs::detect_filterbank(lead, window.fs())?;
        *slot = bsqi(&a, &b, tol_ms).unwrap_or(0.0);
    }
    Ok(out)
}

/// Top-`k` segments by mean bSQI (earlier start wins ties). Empty when the
/// best segment falls below `threshold`, which excludes the region.
pub fn select(segments: &[ScoredSegment], k: usize, threshold: f64) -> Vec<ScoredSegment> {
    let mut ranked: Vec<&ScoredSegment> = segments.iter().collect();
    ranked.sort_by(|a, b| {
        b.bsqi_mean
            .total_cmp(&a.bsqi_mean)
            .then(a.start_s.total_cmp(&b.start_s))
    });
    match ranked.first() {
        Some(best) if best.bsqi_mean >= threshold => ranked.into_iter().take(k).cloned().collect(),
        _ => Vec::new(),
    }
}
