//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Everything runs inside a single test so that the timed criteria do not
//! compete with each other for cores.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ecgrisk_cli::artifacts::{FeatureTable, FEATURES_STATS, FEATURES_TRAIN, VOLCANO};
use ecgrisk_cli::config::SynthConfig;
use ecgrisk_cli::synth::write_cohort;
use ecgrisk_cli::{Pipeline, PipelineConfig, Stage};
use ecgrisk_core::delineation::condition;
use ecgrisk_core::features::{lead_feature_names, lead_features, FeatureConfig, N_ECG_FEATURES};
use ecgrisk_core::learn::cohort::{permute_labels, PlantedCohort};
use ecgrisk_core::learn::{mrmr_select, nested_cv, roc_auc, CvConfig, CvReport, FeatureSet, MrmrForm};
use ecgrisk_core::qrs::{detect_energy, detect_filterbank, matched_pairs, PeakList};
use ecgrisk_core::quality::{scan, select, ScanConfig};
use ecgrisk_core::stats::{paired_ttest, volcano, FcMode, PairedFeatureTable, VolcanoConfig};
use ecgrisk_core::synth::{add_white_noise, generate, BeatTemplate, SynthSpec, DEFAULT_LEAD_GAINS};
use ecgrisk_core::{Phase, LEADS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

// Tolerances and sizes fixed by the criteria.
const C1_MAX_RUNTIME: Duration = Duration::from_secs(120);
const C1_PATIENTS: usize = 20;
const C1_DURATION_S: f64 = 600.0;
const C2_CLEAN_MIN_BSQI: f64 = 0.95;
const C2_GATE: f64 = 0.8;
const C2_TRIALS: u64 = 20;
const C2_MIN_EXCLUDED: usize = 19;
const C3_MIN_SENSITIVITY: f64 = 0.99;
const C3_MIN_PRECISION: f64 = 0.99;
const C3_MATCH_MS: f64 = 150.0;
const C4_INTERVAL_TOL_MS: f64 = 20.0;
const C4_RWAVE_REL_TOL: f64 = 0.10;
const C4_COHORTS: u64 = 20;
const C5_P_TOL: f64 = 1e-8;
const C5_VECTORS: u64 = 100;
const C5_HR_SHIFT_BPM: f64 = 20.0;
const C6_MAX_PATIENTS: usize = 20;
const C7_PATIENTS: usize = 45;
const C7_MIN_AUC: f64 = 0.9;
const C7_MIN_FOLD_HITS: usize = 6;
const C7_PERMUTATIONS: u64 = 20;
const C7_NULL_RANGE: (f64, f64) = (0.35, 0.65);
const C7_MAX_RUNTIME: Duration = Duration::from_secs(600);
const C7_BUDGET: usize = 50;
/// Search budget for each permuted-label run.
const C7_NULL_BUDGET: usize = 10;
const C8_FOLDS: usize = 8;
const C8_MRMR_K: usize = 5;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg.into()) }
}

/// Shared 20-patient, 10-minute cohort with a +20 bpm post shift, run through features.
struct Fixture {
    _dir: tempfile::TempDir,
    out: PathBuf,
    feature_runtime: Duration,
}

fn build_fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let cohort = dir.path().join("cohort");
    let synth = SynthConfig {
        n_patients: C1_PATIENTS,
        duration_s: C1_DURATION_S,
        post_hr_shift_bpm: C5_HR_SHIFT_BPM,
        ..SynthConfig::default()
    };
    let manifest = write_cohort(&cohort, &synth, 11).unwrap();
    let out = dir.path().join("out");
    let cfg = PipelineConfig { manifest: Some(manifest), ..PipelineConfig::default() };
    let pipeline = Pipeline::new(cfg, out.clone());
    let start = Instant::now();
    for stage in [Stage::Ingest, Stage::Segments, Stage::Features] {
        pipeline.run(stage).unwrap();
    }
    let feature_runtime = start.elapsed();
    pipeline.run(Stage::Stats).unwrap();
    Fixture { _dir: dir, out, feature_runtime }
}

fn c1_feature_count(fx: &Fixture) -> Check {
    let mut detail = Vec::new();
    for name in [FEATURES_STATS, FEATURES_TRAIN] {
        let t = FeatureTable::read(&fx.out.join(name)).map_err(|e| e.to_string())?;
        let ecg = t.names.iter().filter(|n| !["age", "sex"].contains(&n.as_str())).count();
        let meta = t.names.len() - ecg;
        ensure(ecg == N_ECG_FEATURES && ecg == 804, format!("{name}: {ecg} ECG columns"))?;
        ensure(meta == 2, format!("{name}: {meta} META columns"))?;
        let patients: BTreeSet<&str> = t.rows.iter().map(|r| r.patient_id.as_str()).collect();
        detail.push(format!("{name}: {ecg}+{meta} columns, {} patients", patients.len()));
    }
    ensure(
        fx.feature_runtime < C1_MAX_RUNTIME,
        format!("runtime {:.1} s exceeds {} s", fx.feature_runtime.as_secs_f64(), C1_MAX_RUNTIME.as_secs()),
    )?;
    Ok(format!("{}; ingest..features {:.1} s", detail.join("; "), fx.feature_runtime.as_secs_f64()))
}

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn c2_bsqi() -> Check {
    let cfg = ScanConfig::default();
    // In-band (0.5-40 Hz) power of unit-variance white noise at 2 kHz.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let unit: Vec<f64> = (0..400_000).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let unit_band = power(&condition(&unit, 2000.0)) / power(&unit);

    let mut clean_min = f64::INFINITY;
    let mut excluded = 0;
    let mut worst_best: f64 = 0.0;
    for seed in 0..C2_TRIALS {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let spec = SynthSpec {
            hr_bpm: r.random_range(55.0..=85.0),
            hrv_std_ms: 20.0,
            noise_uv: 5.0,
            duration_s: 300.0,
            seed,
            ..SynthSpec::default()
        };
        let (rec, _) = generate(&spec).map_err(|e| e.to_string())?;
        if seed < 5 {
            let windows = scan(&rec, Phase::Pre, 0.0, 10.0, &cfg).map_err(|e| e.to_string())?;
            clean_min = windows.iter().map(|w| w.bsqi_mean).fold(clean_min, f64::min);
        }
        // 0 dB: in-band noise power equals in-band signal power on every lead.
        let sd: [f64; 12] = std::array::from_fn(|l| (power(&condition(rec.lead(l), 2000.0)) / unit_band).sqrt());
        let noisy = add_white_noise(&rec, &sd, 1000 + seed);
        let w10 = scan(&noisy, Phase::Pre, 0.0, 10.0, &cfg).map_err(|e| e.to_string())?;
        let w60 = scan(&noisy, Phase::Pre, 0.0, 60.0, &cfg).map_err(|e| e.to_string())?;
        let best = w10.iter().chain(&w60).map(|w| w.bsqi_mean).fold(0.0, f64::max);
        worst_best = worst_best.max(best);
        let gated = select(&w10, 1, C2_GATE).is_empty() && select(&w60, 5, C2_GATE).is_empty();
        if best < C2_GATE && gated {
            excluded += 1;
        }
    }
    ensure(clean_min >= C2_CLEAN_MIN_BSQI, format!("clean window bSQI {clean_min:.3}"))?;
    ensure(excluded >= C2_MIN_EXCLUDED, format!("only {excluded}/{C2_TRIALS} noisy trials excluded"))?;
    Ok(format!(
        "clean min window bSQI {clean_min:.3}; 0 dB noise excluded {excluded}/{C2_TRIALS}, highest best-segment bSQI {worst_best:.3}"
    ))
}

fn c3_detectors() -> Check {
    let mut worst = (f64::INFINITY, f64::INFINITY);
    for (i, hr) in [50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0].into_iter().enumerate() {
        let spec = SynthSpec { hr_bpm: hr, hrv_std_ms: 20.0, noise_uv: 5.0, duration_s: 60.0, seed: 30 + i as u64, ..SynthSpec::default() };
        let (rec, truth) = generate(&spec).map_err(|e| e.to_string())?;
        let reference = PeakList::new(truth.r_peaks(), rec.fs());
        for lead in 0..12 {
            for (name, found) in [
                ("energy", detect_energy(rec.lead(lead), rec.fs())),
                ("filterbank", detect_filterbank(rec.lead(lead), rec.fs())),
            ] {
                let found = found.map_err(|e| format!("{name} {}: {e}", LEADS[lead]))?;
                let m = matched_pairs(&reference, &found, C3_MATCH_MS).len() as f64;
                let se = m / reference.len() as f64;
                let pp = m / found.len().max(1) as f64;
                worst = (worst.0.min(se), worst.1.min(pp));
                ensure(
                    se >= C3_MIN_SENSITIVITY && pp >= C3_MIN_PRECISION,
                    format!("{name} at {hr} bpm lead {}: Se {se:.4} PPV {pp:.4}", LEADS[lead]),
                )?;
            }
        }
    }
    Ok(format!("8 heart rates x 12 leads x 2 detectors; min Se {:.4}, min PPV {:.4}", worst.0, worst.1))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn c4_biomarkers() -> Check {
    let names = lead_feature_names();
    let idx = |n: &str| names.iter().position(|x| x == n).unwrap();
    let mut worst = [0.0f64; 4];
    for seed in 0..C4_COHORTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = BeatTemplate::default();
        let templates = DEFAULT_LEAD_GAINS.iter().map(|&g| base.scaled(g * rng.random_range(0.8..1.2))).collect();
        let spec = SynthSpec {
            hr_bpm: rng.random_range(50.0..100.0),
            hrv_std_ms: 20.0,
            noise_uv: 5.0,
            templates,
            seed,
            ..SynthSpec::default()
        };
        let (rec, truth) = generate(&spec).map_err(|e| e.to_string())?;
        let qt = median(truth.beats.iter().map(|b| b.qt_int_ms).collect());
        let qrs = median(truth.beats.iter().map(|b| b.qrs_int_ms).collect());
        let pr = median(truth.beats.iter().filter_map(|b| b.pr_int_ms).collect());
        for lead in 0..12 {
            let f = lead_features(rec.lead(lead), rec.fs(), LEADS[lead], &FeatureConfig::default());
            let rwave = median(truth.beats.iter().map(|b| b.rwave_uv[lead]).collect());
            let get = |n: &str| f[idx(n)].ok_or_else(|| format!("seed {seed} lead {}: {n} missing", LEADS[lead]));
            let err = [
                (get("QT_int_med")? - qt).abs(),
                (get("QRS_int_med")? - qrs).abs(),
                (get("PR_int_med")? - pr).abs(),
                ((get("Rwave_med")? - rwave) / rwave).abs(),
            ];
            for (w, e) in worst.iter_mut().zip(err) {
                *w = w.max(e);
            }
            ensure(
                err[..3].iter().all(|&e| e <= C4_INTERVAL_TOL_MS) && err[3] <= C4_RWAVE_REL_TOL,
                format!("seed {seed} lead {}: errors {err:?}", LEADS[lead]),
            )?;
        }
    }
    Ok(format!(
        "{C4_COHORTS} cohorts x 12 leads; worst |dQT| {:.1} ms, |dQRS| {:.1} ms, |dPR| {:.1} ms, Rwave {:.1} %",
        worst[0],
        worst[1],
        worst[2],
        100.0 * worst[3]
    ))
}

fn c5_statistics(fx: &Fixture) -> Check {
    // Independent oracle: t from first principles, p from statrs.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut max_dp: f64 = 0.0;
    for _ in 0..C5_VECTORS {
        let n = rng.random_range(3..=12);
        let pre: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let post: Vec<f64> = pre.iter().map(|v| v + rng.random_range(-2.0..3.0)).collect();
        let d: Vec<f64> = pre.iter().zip(&post).map(|(a, b)| b - a).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let t = mean / (sd / (n as f64).sqrt());
        let oracle = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap().cdf(t.abs()));
        let got = paired_ttest(&pre.iter().map(|&v| Some(v)).collect::<Vec<_>>(), &post.iter().map(|&v| Some(v)).collect::<Vec<_>>())
            .map_err(|e| e.to_string())?;
        max_dp = max_dp.max((got.p - oracle).abs());
    }
    ensure(max_dp <= C5_P_TOL, format!("max |dp| {max_dp:e}"))?;

    // Every volcano row obeys its predicate, in both fold-change modes.
    let mut rows_checked = 0;
    for mode in [FcMode::Raw, FcMode::Log2] {
        let cfg = VolcanoConfig { fc_mode: mode, ..VolcanoConfig::default() };
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(50 + seed);
            let features: Vec<String> = (0..40).map(|j| format!("f{j}")).collect();
            let pre: Vec<Vec<Option<f64>>> = (0..12).map(|_| (0..40).map(|_| Some(rng.random_range(0.5..2.0))).collect()).collect();
            let post: Vec<Vec<Option<f64>>> = pre
                .iter()
                .map(|r| r.iter().enumerate().map(|(j, v)| v.map(|v| v * (1.0 + 0.05 * j as f64) + rng.random_range(-0.3..0.3))).collect())
                .collect();
            let table = PairedFeatureTable { patients: (0..12).map(|i| format!("P{i}")).collect(), features, pre, post };
            for row in volcano(&table, &cfg) {
                let fc_ok = match mode {
                    FcMode::Raw => row.mean_fc.is_some_and(|f| f.abs() > 1.0),
                    FcMode::Log2 => row.mean_fc.is_some_and(|f| f != 0.0 && f.abs().log2().abs() >= 1.0),
                };
                let expected = row.p_value.is_some_and(|p| p < 0.05) && fc_ok;
                ensure(row.significant == expected, format!("{mode:?} row {} violates its predicate", row.feature))?;
                rows_checked += 1;
            }
        }
    }

    // Planted +20 bpm shift: medHR features flagged.
    let text = std::fs::read_to_string(fx.out.join(VOLCANO)).map_err(|e| e.to_string())?;
    let mut flagged = BTreeMap::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols[0].ends_with("_medHR") {
            flagged.insert(cols[0].to_string(), cols[4] == "true");
        }
    }
    let hits = flagged.values().filter(|&&s| s).count();
    ensure(flagged.len() == 12 && hits == 12, format!("medHR flagged on {hits}/{} leads", flagged.len()))?;
    Ok(format!("max |dp| {max_dp:.1e} over {C5_VECTORS} vectors; {rows_checked} volcano rows obey predicate; medHR significant on {hits}/12 leads"))
}

fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                num += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
            }
        }
    }
    num / den
}

fn c6_auroc() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    for _ in 0..5000 {
        let n = rng.random_range(2..=C6_MAX_PATIENTS);
        let levels = rng.random_range(2..=8);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        if !labels.contains(&0) || !labels.contains(&1) {
            continue;
        }
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / 5.0).collect();
        let got = roc_auc(&scores, &labels).map_err(|e| e.to_string())?.auc;
        let want = brute_auc(&scores, &labels);
        ensure(got == want, format!("AUROC {got} vs concordance {want} on {scores:?} {labels:?}"))?;
        checked += 1;
    }
    Ok(format!("{checked} random instances with 2..={C6_MAX_PATIENTS} patients, exact equality"))
}

fn planted() -> PlantedCohort {
    PlantedCohort {
        n_patients: C7_PATIENTS,
        n_positive: 15,
        n_features: 804,
        effect_size: 3.0,
        seed: 7,
        ..PlantedCohort::default()
    }
}

fn c7_nested_cv(report: &CvReport, runtime: Duration) -> Check {
    let hits = report.folds.iter().filter(|f| f.selected_features.iter().any(|n| n == "f000")).count();
    ensure(report.mean_auc >= C7_MIN_AUC, format!("planted mean AUROC {:.3}", report.mean_auc))?;
    ensure(hits >= C7_MIN_FOLD_HITS, format!("planted feature selected in {hits}/8 folds"))?;
    ensure(runtime <= C7_MAX_RUNTIME, format!("planted run took {:.0} s", runtime.as_secs_f64()))?;

    let table = planted().generate();
    let mut aucs = Vec::new();
    for seed in 0..C7_PERMUTATIONS {
        let permuted = permute_labels(&table, 1000 + seed);
        let cfg = CvConfig { budget: C7_NULL_BUDGET, seed, ..CvConfig::default() };
        let r = nested_cv(&permuted, FeatureSet::Ecg, Phase::Post, &cfg).map_err(|e| e.to_string())?;
        aucs.push(r.mean_auc);
    }
    let null_mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
    ensure(
        (C7_NULL_RANGE.0..=C7_NULL_RANGE.1).contains(&null_mean),
        format!("permuted-label mean AUROC {null_mean:.3}"),
    )?;
    Ok(format!(
        "planted AUROC {:.3}, feature in {hits}/8 folds, {:.0} s at budget {C7_BUDGET}; permuted mean AUROC {null_mean:.3} over {C7_PERMUTATIONS} seeds",
        report.mean_auc,
        runtime.as_secs_f64()
    ))
}

fn c8_protocol(report: &CvReport) -> Check {
    ensure(report.folds.len() == C8_FOLDS, format!("{} outer folds", report.folds.len()))?;
    for f in &report.folds {
        ensure(f.n_inner_folds == C8_FOLDS, format!("fold {} has {} inner folds", f.fold, f.n_inner_folds))?;
        let inner: BTreeSet<usize> = report
            .trace
            .iter()
            .filter(|e| e.outer_fold == f.fold)
            .filter_map(|e| e.inner_fold)
            .collect();
        ensure(inner == (0..C8_FOLDS).collect(), format!("fold {} fitted inner folds {inner:?}", f.fold))?;
        let test: BTreeSet<&String> = f.test_patients.iter().collect();
        for e in report.trace.iter().filter(|e| e.outer_fold == f.fold) {
            ensure(e.patients.iter().all(|p| !test.contains(p)), format!("fold {} {} saw test patients", f.fold, e.stage))?;
        }
    }
    let all: Vec<&String> = report.folds.iter().flat_map(|f| &f.test_patients).collect();
    let unique: BTreeSet<&String> = all.iter().copied().collect();
    ensure(all.len() == unique.len() && unique.len() == report.n_patients, "patients repeat across outer folds")?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y: Vec<u8> = (0..60).map(|i| (i % 2) as u8).collect();
    let x: Vec<Vec<f64>> = (0..60).map(|_| (0..30).map(|_| rng.random::<f64>()).collect()).collect();
    for form in [MrmrForm::Difference, MrmrForm::Quotient] {
        let k = mrmr_select(&x, &y, C8_MRMR_K, form).len();
        ensure(k == C8_MRMR_K, format!("mRMR {form:?} returned {k} features"))?;
    }

    let aucs: Vec<f64> = report.folds.iter().filter_map(|f| f.auc).collect();
    let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
    ensure((report.mean_auc - mean).abs() <= 1e-12, format!("reported {} vs mean {mean}", report.mean_auc))?;
    Ok(format!(
        "8 outer x 8 inner folds, no test patient in any fit, mRMR k=5 gives 5, reported AUROC = mean of {} fold AUROCs",
        aucs.len()
    ))
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c9_determinism() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = root.path().join("small.toml");
    std::fs::write(
        &config,
        "seed = 9\n[segments]\nregion_s = 90.0\nmin_duration_s = 180.0\n\
         [train]\nphases = [\"post\"]\nfeature_sets = [\"meta+ecg\"]\nbudget = 10\n\
         [synth]\nn_patients = 16\nduration_s = 180.0\n",
    )
    .map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_ecgrisk");
    let run = |name: &str| -> Result<PathBuf, String> {
        let dir = root.path().join(name);
        let cohort = dir.join("cohort");
        let s = Command::new(bin).args(["synth", "--config"]).arg(&config).arg("--out").arg(&cohort).status();
        ensure(s.map_err(|e| e.to_string())?.success(), "synth failed")?;
        let s = Command::new(bin)
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.join("out"))
            .arg("--manifest")
            .arg(cohort.join("manifest.csv"))
            .status();
        ensure(s.map_err(|e| e.to_string())?.success(), "run failed")?;
        Ok(dir)
    };
    let a = files(&run("a")?);
    let b = files(&run("b")?);
    ensure(a.len() > 20, format!("only {} artifacts", a.len()))?;
    ensure(a.keys().eq(b.keys()), "artifact sets differ")?;
    let differing: Vec<_> = a.iter().filter(|(k, v)| b[*k] != **v).map(|(k, _)| k.display().to_string()).collect();
    ensure(differing.is_empty(), format!("artifacts differ: {differing:?}"))?;
    Ok(format!("{} artifacts byte-identical across two seeded runs", a.len()))
}

/// Bypasses libtest output capture so the verdicts show in every run.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn record(id: u8, name: &str, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let secs = start.elapsed().as_secs_f64();
    let line = match &result {
        Ok(detail) => format!("criterion {id} PASS: {name}: {detail} [{secs:.0} s]"),
        Err(why) => format!("criterion {id} FAIL: {name}: {why} [{secs:.0} s]"),
    };
    emit(&line);
    result.is_ok()
}

#[test]
fn acceptance() {
    let fixture = catch_unwind(build_fixture).ok();
    let mut passed = Vec::new();
    let need_fixture = |f: fn(&Fixture) -> Check| {
        let fx = fixture.as_ref();
        move || fx.map_or_else(|| Err("fixture pipeline failed".to_string()), f)
    };
    passed.push(record(1, "feature-count audit", need_fixture(c1_feature_count)));
    passed.push(record(2, "bSQI oracle", c2_bsqi));
    passed.push(record(3, "detector accuracy", c3_detectors));
    passed.push(record(4, "biomarker ground truth", c4_biomarkers));
    passed.push(record(5, "statistics oracle", need_fixture(c5_statistics)));
    passed.push(record(6, "AUROC oracle", c6_auroc));

    let start = Instant::now();
    let cfg = CvConfig { budget: C7_BUDGET, seed: 3, trace: true, ..CvConfig::default() };
    let planted_report = catch_unwind(|| nested_cv(&planted().generate(), FeatureSet::Ecg, Phase::Post, &cfg));
    let runtime = start.elapsed();
    let planted_report = match planted_report {
        Ok(Ok(r)) => Ok(r),
        Ok(Err(e)) => Err(e.to_string()),
        Err(_) => Err("nested CV panicked".to_string()),
    };
    passed.push(record(7, "nested-CV sanity", || c7_nested_cv(planted_report.as_ref().map_err(Clone::clone)?, runtime)));
    passed.push(record(8, "protocol shape", || c8_protocol(planted_report.as_ref().map_err(Clone::clone)?)));
    passed.push(record(9, "determinism", c9_determinism));

    let n_pass = passed.iter().filter(|&&p| p).count();
    emit(&format!("acceptance: {n_pass}/{} criteria passed", passed.len()));
    assert_eq!(n_pass, passed.len(), "some acceptance criteria failed");
}
