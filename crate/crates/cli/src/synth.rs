//! Synthetic cohort writer: recordings, manifest and ground-truth beats.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ecgrisk_core::recordio::{save_manifest, save_recording};
use ecgrisk_core::synth::{add_white_noise, cohort, generate, CohortParams};
use ecgrisk_core::{CohortManifest, Format, GroundTruth, ManifestEntry, Recording};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::SynthConfig;
use crate::error::Classify;

pub const MANIFEST: &str = "manifest.csv";
pub const GROUND_TRUTH: &str = "ground_truth.csv";
/// Noise σ for recordings replaced by pure noise.
pub const PURE_NOISE_UV: f64 = 300.0;

#[derive(Serialize)]
struct TruthRow<'a> {
    patient_id: &'a str,
    beat: usize,
    r: usize,
    rr_ms: Option<f64>,
    p_on: Option<usize>,
    p_peak: Option<usize>,
    p_off: Option<usize>,
    qrs_on: Option<usize>,
    q: Option<usize>,
    s: Option<usize>,
    j: Option<usize>,
    t_peak: Option<usize>,
    t_off: Option<usize>,
    pr_int_ms: Option<f64>,
    qrs_int_ms: f64,
    qt_int_ms: f64,
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Binary => "bin",
        Format::Csv => "csv",
    }
}

/// Write a cohort to `dir`; returns the manifest path.
pub fn write_cohort(dir: &Path, cfg: &SynthConfig, seed: u64) -> Result<PathBuf> {
    let rec_dir = dir.join("recordings");
    std::fs::create_dir_all(&rec_dir)
        .with_context(|| format!("creating {}", rec_dir.display()))
        .config()?;
    let params = CohortParams {
        n_patients: cfg.n_patients,
        duration_s: cfg.duration_s,
        fs: cfg.fs,
        hr_range: (cfg.hr_min_bpm, cfg.hr_max_bpm),
        post_hr_shift_bpm: cfg.post_hr_shift_bpm,
        hrv_std_ms: cfg.hrv_std_ms,
        noise_uv: cfg.noise_uv,
        seed,
    };
    let patients = cohort(&params);
    let first_noise = cfg.n_patients.saturating_sub(cfg.noise_patients);
    let truths: Vec<(String, GroundTruth)> = patients
        .par_iter()
        .enumerate()
        .map(|(i, p)| -> Result<_> {
            let (mut rec, truth) = generate(&p.spec).with_context(|| format!("generating {}", p.spec.patient_id))?;
            if i >= first_noise {
                let flat = Recording::new(
                    rec.patient_id(),
                    vec![vec![0.0; rec.sample_count()]; 12],
                    rec.fs(),
                    rec.quant(),
                )?;
                rec = add_white_noise(&flat, &[PURE_NOISE_UV; 12], p.spec.seed ^ 0x5eed);
            }
            let path = rec_dir.join(format!("{}.{}", p.spec.patient_id, extension(cfg.format)));
            save_recording(&rec, &path, cfg.format)?;
            let truth = if i >= first_noise { GroundTruth { fs: truth.fs, beats: Vec::new() } } else { truth };
            Ok((p.spec.patient_id.clone(), truth))
        })
        .collect::<Result<_>>()
        .config()?;

    let manifest = CohortManifest {
        entries: patients
            .iter()
            .map(|p| ManifestEntry {
                patient_id: p.spec.patient_id.clone(),
                recording_path: PathBuf::from("recordings")
                    .join(format!("{}.{}", p.spec.patient_id, extension(cfg.format))),
                afr_label: Some(p.afr_label),
                age: Some(p.age),
                sex: Some(p.sex),
                followup_days: None,
            })
            .collect(),
    };
    let manifest_path = dir.join(MANIFEST);
    save_manifest(&manifest, &manifest_path).config()?;

    let mut w = csv::Writer::from_path(dir.join(GROUND_TRUTH)).config()?;
    for (id, truth) in &truths {
        for (k, b) in truth.beats.iter().enumerate() {
            w.serialize(TruthRow {
                patient_id: id,
                beat: k,
                r: b.r,
                rr_ms: b.rr_ms,
                p_on: b.p_on,
                p_peak: b.p_peak,
                p_off: b.p_off,
                qrs_on: b.qrs_on,
                q: b.q,
                s: b.s,
                j: b.j,
                t_peak: b.t_peak,
                t_off: b.t_off,
                pr_int_ms: b.pr_int_ms,
                qrs_int_ms: b.qrs_int_ms,
                qt_int_ms: b.qt_int_ms,
            })
            .config()?;
        }
    }
    w.flush().config()?;
    Ok(manifest_path)
}
