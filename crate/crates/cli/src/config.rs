//! Pipeline configuration, loaded from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ecgrisk_core::learn::{Aggregation, MrmrForm, DEFAULT_K_GRID};
use ecgrisk_core::quality::{DEFAULT_OVERLAP_S, DEFAULT_THRESHOLD, DEFAULT_TOLERANCE_MS};
use ecgrisk_core::{CvConfig, FeatureConfig, FeatureSet, Format, Phase, ScanConfig, VolcanoConfig};
use serde::{Deserialize, Serialize};

use crate::error::Classify;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub segments: SegmentsConfig,
    pub features: FeaturesConfig,
    pub volcano: VolcanoConfig,
    pub train: TrainConfig,
    pub synth: SynthConfig,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentsConfig {
    /// Length of the pre and post regions at either end of a recording.
    pub region_s: f64,
    /// Recordings shorter than this are treated as corrupted.
    pub min_duration_s: f64,
    pub overlap_s: f64,
    pub tolerance_ms: f64,
    pub bsqi_threshold: f64,
    pub stats_window_s: f64,
    pub stats_top_k: usize,
    pub train_window_s: f64,
    pub train_top_k: usize,
}

impl Default for SegmentsConfig {
    fn default() -> Self {
        Self {
            region_s: 300.0,
            min_duration_s: 600.0,
            overlap_s: DEFAULT_OVERLAP_S,
            tolerance_ms: DEFAULT_TOLERANCE_MS,
            bsqi_threshold: DEFAULT_THRESHOLD,
            stats_window_s: 10.0,
            stats_top_k: 1,
            train_window_s: 60.0,
            train_top_k: 5,
        }
    }
}

impl SegmentsConfig {
    pub fn scan(&self) -> ScanConfig {
        ScanConfig {
            overlap_s: self.overlap_s,
            stride_s: None,
            tolerance_ms: self.tolerance_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    /// Minimum usable RR intervals per segment for HRV features.
    pub hrv_min_intervals: usize,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        Self { hrv_min_intervals: 5 }
    }
}

impl FeaturesConfig {
    pub fn core(&self) -> FeatureConfig {
        FeatureConfig {
            hrv_min_intervals: self.hrv_min_intervals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub phases: Vec<Phase>,
    pub feature_sets: Vec<FeatureSet>,
    pub outer_k: usize,
    pub inner_k: usize,
    pub budget: usize,
    pub k_grid: Vec<usize>,
    pub mrmr_form: MrmrForm,
    pub aggregation: Aggregation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            phases: vec![Phase::Pre, Phase::Post],
            feature_sets: vec![FeatureSet::Meta, FeatureSet::Ecg, FeatureSet::MetaEcg],
            outer_k: 8,
            inner_k: 8,
            budget: 50,
            k_grid: DEFAULT_K_GRID.to_vec(),
            mrmr_form: MrmrForm::default(),
            aggregation: Aggregation::default(),
        }
    }
}

impl TrainConfig {
    pub fn cv(&self, seed: u64) -> CvConfig {
        CvConfig {
            outer_k: self.outer_k,
            inner_k: self.inner_k,
            budget: self.budget,
            seed,
            k_grid: self.k_grid.clone(),
            mrmr_form: self.mrmr_form,
            aggregation: self.aggregation,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub duration_s: f64,
    pub fs: f64,
    pub hr_min_bpm: f64,
    pub hr_max_bpm: f64,
    /// Heart-rate change between the start and the end of every recording.
    pub post_hr_shift_bpm: f64,
    pub hrv_std_ms: f64,
    pub noise_uv: f64,
    /// The last `noise_patients` recordings are replaced by pure noise.
    pub noise_patients: usize,
    pub format: Format,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_patients: 20,
            duration_s: 600.0,
            fs: 2000.0,
            hr_min_bpm: 55.0,
            hr_max_bpm: 85.0,
            post_hr_shift_bpm: 0.0,
            hrv_std_ms: 20.0,
            noise_uv: 5.0,
            noise_patients: 0,
            format: Format::Binary,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .config()?;
        let cfg: PipelineConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))
            .config()?;
        cfg.validate().config()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.segments;
        let positive = [
            ("segments.region_s", s.region_s),
            ("segments.min_duration_s", s.min_duration_s),
            ("segments.tolerance_ms", s.tolerance_ms),
            ("segments.bsqi_threshold", s.bsqi_threshold),
            ("segments.stats_window_s", s.stats_window_s),
            ("segments.train_window_s", s.train_window_s),
            ("synth.duration_s", self.synth.duration_s),
            ("synth.fs", self.synth.fs),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} must be positive, got {v}");
            }
        }
        if s.overlap_s < 0.0 {
            bail!("segments.overlap_s must not be negative");
        }
        if s.bsqi_threshold > 1.0 {
            bail!("segments.bsqi_threshold must not exceed 1");
        }
        if s.min_duration_s < 2.0 * s.region_s {
            bail!("segments.min_duration_s must cover both regions");
        }
        for (name, w) in [("stats", s.stats_window_s), ("train", s.train_window_s)] {
            if w > s.region_s {
                bail!("segments.{name}_window_s exceeds the region length");
            }
            if w <= s.overlap_s {
                bail!("segments.{name}_window_s must exceed the overlap");
            }
        }
        if s.stats_top_k == 0 || s.train_top_k == 0 || s.train_top_k > 5 {
            bail!("segment top-k must be between 1 and 5");
        }
        if self.features.hrv_min_intervals < 2 {
            bail!("features.hrv_min_intervals must be at least 2");
        }
        let v = &self.volcano;
        if !(v.p_threshold > 0.0 && v.p_threshold <= 1.0) || !(v.fc_threshold >= 0.0) {
            bail!("volcano thresholds out of range");
        }
        let t = &self.train;
        if t.outer_k < 2 || t.inner_k < 2 {
            bail!("train fold counts must be at least 2");
        }
        if t.budget < 10 {
            bail!("train.budget must be at least 10");
        }
        if t.k_grid.is_empty() || t.k_grid.contains(&0) {
            bail!("train.k_grid must hold positive feature counts");
        }
        if t.phases.is_empty() || t.feature_sets.is_empty() {
            bail!("train.phases and train.feature_sets must not be empty");
        }
        if self.synth.hr_min_bpm > self.synth.hr_max_bpm {
            bail!("synth heart-rate range is empty");
        }
        Ok(())
    }
}
