//! Per-segment ECG feature vector: 23 HRV and 44 morphology aggregates for
//! each of the 12 leads, named `<lead>_<feature>`.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delineation::{condition, delineate_conditioned};
use crate::hrv::{self, HRV_FEATURES};
use crate::morphology::{aggregate_names, mor_aggregate, mor_beats_conditioned};
use crate::qrs::detect_energy;
use crate::recordio::{Recording, LEADS};

/// Named feature values; `None` marks a missing value.
pub type FeatureVector = IndexMap<String, Option<f64>>;

pub const FEATURES_PER_LEAD: usize = 23 + 44;
pub const N_ECG_FEATURES: usize = FEATURES_PER_LEAD * 12;
pub const META_FEATURES: [&str; 2] = ["age", "sex"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Minimum usable RR intervals for HRV features on a segment.
    pub hrv_min_intervals: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            hrv_min_intervals: hrv::DEFAULT_MIN_INTERVALS,
        }
    }
}

/// Feature names for one lead, without the lead prefix.
pub fn lead_feature_names() -> Vec<String> {
    HRV_FEATURES
        .iter()
        .map(|s| s.to_string())
        .chain(aggregate_names())
        .collect()
}

/// All 804 ECG feature names in column order (lead-major).
pub fn ecg_feature_names() -> Vec<String> {
    let per_lead = lead_feature_names();
    LEADS
        .iter()
        .flat_map(|lead| per_lead.iter().map(move |f| format!("{lead}_{f}")))
        .collect()
}

/// The 67 features of one lead in [`lead_feature_names`] order.
pub fn lead_features(x: &[f64], fs: f64, lead: &str, cfg: &FeatureConfig) -> Vec<Option<f64>> {
    let mut out = vec![None; FEATURES_PER_LEAD];
    let Ok(peaks) = detect_energy(x, fs) else {
        log::debug!("lead {lead}: QRS detection failed");
        return out;
    };
    match hrv::rr_from_peaks(&peaks, lead).and_then(|rr| hrv::hrv_features(&rr, cfg.hrv_min_intervals)) {
        Ok(f) => out[..23].copy_from_slice(&f.values),
        Err(e) => log::debug!("lead {lead}: no HRV features ({e})"),
    }
    let sig = condition(x, fs);
    if let Ok(set) = delineate_conditioned(&sig, &peaks, fs, lead) {
        if let Ok(beats) = mor_beats_conditioned(&set, &sig) {
            for (slot, v) in out[23..].iter_mut().zip(mor_aggregate(&beats)) {
                *slot = v;
            }
        }
    }
    out
}

/// All 804 ECG features of a segment; leads are processed in parallel.
pub fn segment_features(seg: &Recording, cfg: &FeatureConfig) -> FeatureVector {
    let per_lead: Vec<Vec<Option<f64>>> = (0..LEADS.len())
        .into_par_iter()
        .map(|i| lead_features(seg.lead(i), seg.fs(), LEADS[i], cfg))
        .collect();
    ecg_feature_names()
        .into_iter()
        .zip(per_lead.into_iter().flatten())
        .collect()
}
