//! Per-beat morphological biomarkers and their per-segment median/std.
//!
//! Amplitudes are in µV relative to the PR-segment baseline of the
//! conditioned lead; intervals are in ms; `QRS_area` is in µV·ms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delineation::{baseline, condition, FiducialSet};
use crate::dsp;

pub const MOR_FEATURES: [&str; 22] = [
    "Pwave_int",
    "PR_int",
    "PR2_int",
    "PR_seg",
    "QRS_int",
    "QT_int",
    "QT_cB",
    "QT_cF",
    "QT_cH",
    "RR_int",
    "ST_seg",
    "TP_seg",
    "Twave_int",
    "Jpoint",
    "R_dep",
    "Rwave",
    "Twave",
    "Pwave",
    "Qwave",
    "Swave",
    "ST_dev",
    "QRS_area",
];

/// Beats needed before a biomarker's median and std are reported.
pub const MIN_BEATS: usize = 3;
/// ST deviation is read this long after J.
pub const ST_DEV_MS: f64 = 60.0;

#[derive(Debug, Error, PartialEq)]
pub enum MorphologyError {
    #[error("fiducial set has no beats")]
    EmptyFiducials,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MorBeat {
    /// Values in [`MOR_FEATURES`] order.
    pub values: [Option<f64>; 22],
}

impl MorBeat {
    pub fn get(&self, name: &str) -> Option<f64> {
        MOR_FEATURES
            .iter()
            .position(|n| *n == name)
            .and_then(|i| self.values[i])
    }
}

pub fn mor_beats(set: &FiducialSet, x: &[f64]) -> Result<Vec<MorBeat>, MorphologyError> {
    mor_beats_conditioned(set, &condition(x, set.fs))
}

/// As [`mor_beats`], on a lead already passed through [`condition`].
pub fn mor_beats_conditioned(set: &FiducialSet, sig: &[f64]) -> Result<Vec<MorBeat>, MorphologyError> {
    if set.beats.is_empty() {
        return Err(MorphologyError::EmptyFiducials);
    }
    let fs = set.fs;
    let ms = |a: usize, b: usize| (b as f64 - a as f64) * 1000.0 / fs;
    let span = |a: Option<usize>, b: Option<usize>| a.zip(b).map(|(a, b)| ms(a, b));
    let st_offset = dsp::ms_to_samples(ST_DEV_MS, fs);

    let out = set
        .beats
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let next = set.beats.get(i + 1);
            let rr = next.map(|n| ms(b.r, n.r));
            let qt = span(b.qrs_on, b.t_off);
            let qt_cb = qt.zip(rr).map(|(qt, rr)| qt / (rr / 1000.0).sqrt());
            let qt_cf = qt.zip(rr).map(|(qt, rr)| qt / (rr / 1000.0).cbrt());
            let qt_ch = qt.zip(rr).map(|(qt, rr)| qt + 1.75 * (60000.0 / rr - 60.0));

            let base = b.qrs_on.map(|on| baseline(sig, fs, b.p_off, on));
            let amp = |idx: Option<usize>| {
                base.zip(idx.filter(|&k| k < sig.len())).map(|(z, k)| sig[k] - z)
            };
            let area = base.zip(b.qrs_on.zip(b.j)).map(|(z, (on, j))| {
                sig[on..=j.min(sig.len() - 1)].iter().map(|v| (v - z).abs()).sum::<f64>() * 1000.0 / fs
            });

            MorBeat {
                values: [
                    span(b.p_on, b.p_off),
                    span(b.p_on, b.qrs_on),
                    span(b.p_peak, Some(b.r)),
                    span(b.p_off, b.qrs_on),
                    span(b.qrs_on, b.j),
                    qt,
                    qt_cb,
                    qt_cf,
                    qt_ch,
                    rr,
                    span(b.j, b.t_on),
                    span(b.t_off, next.and_then(|n| n.p_on)),
                    span(b.j, b.t_off),
                    amp(b.j),
                    span(b.q, Some(b.r)),
                    amp(Some(b.r)),
                    amp(b.t_peak),
                    amp(b.p_peak),
                    amp(b.q),
                    amp(b.s),
                    amp(b.j.map(|j| j + st_offset)),
                    area,
                ],
            }
        })
        .collect();
    Ok(out)
}

/// Names of the 44 aggregates: `<biomarker>_med` then `<biomarker>_std` for each biomarker.
pub fn aggregate_names() -> Vec<String> {
    MOR_FEATURES
        .iter()
        .flat_map(|n| [format!("{n}_med"), format!("{n}_std")])
        .collect()
}

/// Median and population standard deviation of every biomarker over the
/// beats where it is present, in [`aggregate_names`] order.
pub fn mor_aggregate(beats: &[MorBeat]) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(44);
    for k in 0..MOR_FEATURES.len() {
        let present: Vec<f64> = beats.iter().filter_map(|b| b.values[k]).collect();
        if present.len() < MIN_BEATS {
            out.extend([None, None]);
            continue;
        }
        // Shifted by the first value so equal inputs give exactly zero.
        let shifted: Vec<f64> = present.iter().map(|v| v - present[0]).collect();
        let mean = dsp::mean(&shifted);
        let var = shifted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / present.len() as f64;
        out.push(Some(dsp::median(&present)));
        out.push(Some(var.sqrt()));
    }
    out
}
