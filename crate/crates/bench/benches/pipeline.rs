use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ecgrisk_core::features::{segment_features, FeatureConfig};
use ecgrisk_core::learn::cohort::PlantedCohort;
use ecgrisk_core::learn::{nested_cv, rf_train, HyperParams};
use ecgrisk_core::qrs::{detect_energy, detect_filterbank};
use ecgrisk_core::quality::{scan, ScanConfig};
use ecgrisk_core::synth::{generate, SynthSpec};
use ecgrisk_core::{CvConfig, FeatureSet, Phase};

fn segment(duration_s: f64) -> ecgrisk_core::Recording {
    let spec = SynthSpec { hr_bpm: 70.0, hrv_std_ms: 20.0, noise_uv: 5.0, duration_s, seed: 1, ..SynthSpec::default() };
    generate(&spec).unwrap().0
}

fn detectors(c: &mut Criterion) {
    let rec = segment(60.0);
    let lead = rec.lead(1);
    c.bench_function("detect_energy 60s", |b| b.iter(|| detect_energy(black_box(lead), rec.fs()).unwrap()));
    c.bench_function("detect_filterbank 60s", |b| b.iter(|| detect_filterbank(black_box(lead), rec.fs()).unwrap()));
}

fn quality(c: &mut Criterion) {
    let rec = segment(120.0);
    let cfg = ScanConfig::default();
    c.bench_function("bsqi scan 120s / 10s windows", |b| b.iter(|| scan(black_box(&rec), Phase::Pre, 0.0, 10.0, &cfg).unwrap()));
}

fn features(c: &mut Criterion) {
    let rec = segment(10.0);
    let cfg = FeatureConfig::default();
    c.bench_function("segment_features 10s x 12 leads", |b| b.iter(|| segment_features(black_box(&rec), &cfg)));
}

fn forest(c: &mut Criterion) {
    let table = PlantedCohort { n_patients: 34, n_features: 21, meta: false, ..PlantedCohort::default() }.generate();
    let rows: Vec<_> = table.rows.iter().filter(|r| r.phase == Phase::Post).collect();
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.values.iter().map(|v| v.unwrap_or(0.0)).collect()).collect();
    let y: Vec<u8> = rows.iter().map(|r| r.label).collect();
    let hp = HyperParams { n_trees: 275, ..HyperParams::default() };
    c.bench_function("rf_train 275 trees", |b| b.iter(|| rf_train(black_box(&x), &y, &hp, 7).unwrap()));
}

fn cross_validation(c: &mut Criterion) {
    let table = PlantedCohort { n_patients: 32, n_features: 40, ..PlantedCohort::default() }.generate();
    let cfg = CvConfig { budget: 10, k_grid: vec![3, 5], ..CvConfig::default() };
    let mut group = c.benchmark_group("nested_cv");
    group.sample_size(10);
    group.bench_function("32 patients, budget 10", |b| {
        b.iter(|| nested_cv(black_box(&table), FeatureSet::Ecg, Phase::Post, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, detectors, quality, features, forest, cross_validation);
criterion_main!(benches);
