//! Pipeline stages. Each stage reads the artifacts of the previous one from
//! the output directory and is skipped when its own artifacts already exist,
//! unless forced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use ecgrisk_core::features::{ecg_feature_names, segment_features, META_FEATURES};
use ecgrisk_core::learn::nested_cv;
use ecgrisk_core::quality::{scan_peaks, select, RegionPeaks};
use ecgrisk_core::recordio::{load_manifest, load_recording};
use ecgrisk_core::stats::{volcano, write_volcano_csv, PairedFeatureTable};
use ecgrisk_core::{
    CohortManifest, CohortRow, CohortTable, CvReport, FeatureSet, FeatureVector, Format, Phase, ScoredSegment, Sex,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self as art, Exclusion, ExclusionReport, FeatureRow, FeatureTable, IngestRow};
use crate::config::PipelineConfig;
use crate::error::{Classify, ExitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Segments,
    Features,
    Stats,
    Train,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Segments,
        Stage::Features,
        Stage::Stats,
        Stage::Train,
        Stage::Report,
    ];
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
    pub manifest: Option<PathBuf>,
    pub force: bool,
    /// Restrict `train` to these phases and feature sets.
    pub phases: Option<Vec<Phase>>,
    pub feature_sets: Option<Vec<FeatureSet>>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, out: PathBuf) -> Self {
        let manifest = cfg.manifest.clone();
        Self {
            cfg,
            out,
            manifest,
            force: false,
            phases: None,
            feature_sets: None,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// True when the stage must run: forced, or some output is missing.
    fn needs(&self, stage: &str, outputs: &[String]) -> bool {
        if self.force || outputs.iter().any(|o| !self.path(o).exists()) {
            return true;
        }
        log::info!("{stage}: artifacts present, skipping (use --force to rebuild)");
        false
    }

    fn manifest(&self) -> Result<CohortManifest> {
        let path = self
            .manifest
            .as_ref()
            .ok_or_else(|| anyhow!("no manifest given (--manifest or `manifest` in the config)"))
            .config()?;
        load_manifest(path)
            .with_context(|| format!("loading manifest {}", path.display()))
            .data()
    }

    fn require(&self, name: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if !p.exists() {
            return Err(anyhow!("missing artifact {} (run the earlier stage first)", p.display())).data();
        }
        Ok(p)
    }

    pub fn run(&self, stage: Stage) -> Result<()> {
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))
            .config()?;
        match stage {
            Stage::Ingest => self.ingest(),
            Stage::Segments => self.segments(),
            Stage::Features => self.features(),
            Stage::Stats => self.stats(),
            Stage::Train => self.train(),
            Stage::Report => self.report(),
        }
    }

    pub fn run_all(&self) -> Result<()> {
        for stage in Stage::ALL {
            self.run(stage)?;
        }
        Ok(())
    }

    pub fn ingest(&self) -> Result<()> {
        if !self.needs("ingest", &[art::INGEST.into()]) {
            return Ok(());
        }
        let manifest = self.manifest()?;
        let min_s = self.cfg.segments.min_duration_s;
        let rows: Vec<IngestRow> = manifest
            .entries
            .par_iter()
            .map(|e| {
                let mut row = IngestRow {
                    patient_id: e.patient_id.clone(),
                    status: "corrupted".into(),
                    reason: String::new(),
                    duration_s: None,
                    fs: None,
                };
                let Some(format) = Format::from_path(&e.recording_path) else {
                    row.reason = format!("unknown recording format {}", e.recording_path.display());
                    return row;
                };
                match load_recording(&e.recording_path, format) {
                    Err(err) => row.reason = err.to_string(),
                    Ok(rec) => {
                        row.duration_s = Some(rec.duration_s());
                        row.fs = Some(rec.fs());
                        if rec.duration_s() + 1e-9 < min_s {
                            row.reason = format!("recording of {} s is shorter than {min_s} s", rec.duration_s());
                        } else {
                            row.status = "ok".into();
                        }
                    }
                }
                row
            })
            .collect();
        for r in rows.iter().filter(|r| r.status != "ok") {
            log::warn!("{}: corrupted recording ({})", r.patient_id, r.reason);
        }
        art::write_ingest(&self.path(art::INGEST), &rows).data()?;
        log::info!("ingest: {} of {} recordings usable", rows.iter().filter(|r| r.status == "ok").count(), rows.len());
        Ok(())
    }

    pub fn segments(&self) -> Result<()> {
        let outputs = [art::SEGMENTS_STATS.into(), art::SEGMENTS_TRAIN.into(), art::EXCLUSIONS.into()];
        if !self.needs("segments", &outputs) {
            return Ok(());
        }
        let manifest = self.manifest()?;
        let ingest = art::read_ingest(&self.require(art::INGEST)?).data()?;
        let s = self.cfg.segments.clone();
        let scan_cfg = s.scan();

        let results: Vec<(String, Result<(Vec<ScoredSegment>, Vec<ScoredSegment>), Exclusion>)> = ingest
            .par_iter()
            .map(|row| {
                let id = row.patient_id.clone();
                let excluded = |category: &str, reason: String| Exclusion {
                    patient_id: id.clone(),
                    category: category.into(),
                    reason,
                };
                if row.status != "ok" {
                    return (id.clone(), Err(excluded("corrupted", row.reason.clone())));
                }
                let Some(entry) = manifest.get(&id) else {
                    return (id.clone(), Err(excluded("corrupted", "patient missing from manifest".into())));
                };
                let loaded = Format::from_path(&entry.recording_path)
                    .ok_or_else(|| "unknown recording format".to_string())
                    .and_then(|f| load_recording(&entry.recording_path, f).map_err(|e| e.to_string()));
                let rec = match loaded {
                    Ok(r) => r,
                    Err(e) => return (id.clone(), Err(excluded("corrupted", e))),
                };
                let (pre, post) = match rec.pre_post_regions(s.region_s) {
                    Ok(r) => r,
                    Err(e) => return (id.clone(), Err(excluded("corrupted", e.to_string()))),
                };
                let post_offset = (rec.sample_count() - post.sample_count()) as f64 / rec.fs();
                let mut stats = Vec::new();
                let mut train = Vec::new();
                for (phase, region, offset) in [(Phase::Pre, &pre, 0.0), (Phase::Post, &post, post_offset)] {
                    let peaks = match RegionPeaks::detect(region) {
                        Ok(p) => p,
                        Err(e) => return (id.clone(), Err(excluded("low_quality", format!("{phase}: {e}")))),
                    };
                    for (window, k, sink) in [
                        (s.stats_window_s, s.stats_top_k, &mut stats),
                        (s.train_window_s, s.train_top_k, &mut train),
                    ] {
                        let scored = match scan_peaks(&peaks, &id, phase, offset, window, &scan_cfg) {
                            Ok(v) => v,
                            Err(e) => return (id.clone(), Err(excluded("low_quality", format!("{phase}: {e}")))),
                        };
                        let chosen = select(&scored, k, s.bsqi_threshold);
                        if chosen.is_empty() {
                            let best = scored.iter().map(|w| w.bsqi_mean).fold(0.0, f64::max);
                            let reason = format!(
                                "{phase} {window} s windows: best bSQI {best:.3} < {}",
                                s.bsqi_threshold
                            );
                            return (id.clone(), Err(excluded("low_quality", reason)));
                        }
                        sink.extend(chosen);
                    }
                }
                (id, Ok((stats, train)))
            })
            .collect();

        let mut report = ExclusionReport {
            input: manifest.entries.len(),
            ..ExclusionReport::default()
        };
        let (mut stats, mut train) = (Vec::new(), Vec::new());
        for (_, r) in results {
            match r {
                Ok((a, b)) => {
                    report.processed += 1;
                    stats.extend(a);
                    train.extend(b);
                }
                Err(x) => {
                    log::warn!("{}: excluded as {} ({})", x.patient_id, x.category, x.reason);
                    if x.category == "corrupted" {
                        report.corrupted += 1;
                    } else {
                        report.low_quality += 1;
                    }
                    report.excluded.push(x);
                }
            }
        }
        // Manifest entries that never reached ingest count as corrupted.
        for e in &manifest.entries {
            if !ingest.iter().any(|r| r.patient_id == e.patient_id) {
                report.corrupted += 1;
                report.excluded.push(Exclusion {
                    patient_id: e.patient_id.clone(),
                    category: "corrupted".into(),
                    reason: "not ingested".into(),
                });
            }
        }
        art::write_segments(&self.path(art::SEGMENTS_STATS), &stats).data()?;
        art::write_segments(&self.path(art::SEGMENTS_TRAIN), &train).data()?;
        art::write_json(&self.path(art::EXCLUSIONS), &report).data()?;
        log::info!(
            "segments: {} input, {} processed, {} corrupted, {} low quality",
            report.input,
            report.processed,
            report.corrupted,
            report.low_quality
        );
        if report.processed == 0 {
            return Err(anyhow!("no recording passed the quality gate")).data();
        }
        Ok(())
    }

    pub fn features(&self) -> Result<()> {
        if !self.needs("features", &[art::FEATURES_STATS.into(), art::FEATURES_TRAIN.into()]) {
            return Ok(());
        }
        let manifest = self.manifest()?;
        let stats = art::read_segments(&self.require(art::SEGMENTS_STATS)?).data()?;
        let train = art::read_segments(&self.require(art::SEGMENTS_TRAIN)?).data()?;
        let fcfg = self.cfg.features.core();
        let ecg_names = ecg_feature_names();

        // Patients in first-appearance order with their (task, segment) list.
        let mut order: Vec<String> = Vec::new();
        for s in stats.iter().chain(&train) {
            if !order.contains(&s.patient_id) {
                order.push(s.patient_id.clone());
            }
        }
        let per_patient: Vec<(Vec<FeatureRow>, Vec<FeatureRow>)> = order
            .par_iter()
            .map(|id| -> Result<_> {
                let entry = manifest.get(id).ok_or_else(|| anyhow!("{id} missing from manifest"))?;
                let format = Format::from_path(&entry.recording_path).context("unknown recording format")?;
                let rec = load_recording(&entry.recording_path, format)?;
                let meta = [
                    entry.age,
                    entry.sex.map(|s| match s {
                        Sex::M => 1.0,
                        Sex::F => 0.0,
                    }),
                ];
                let rows = |segs: &[ScoredSegment]| -> Result<Vec<FeatureRow>> {
                    let mut counter: BTreeMap<Phase, usize> = BTreeMap::new();
                    segs.iter()
                        .filter(|s| s.patient_id == *id)
                        .map(|s| {
                            let window = rec.window(s.start_s, s.dur_s)?;
                            let f = segment_features(&window, &fcfg);
                            let n = counter.entry(s.phase).or_insert(0);
                            let segment = *n;
                            *n += 1;
                            Ok(FeatureRow {
                                patient_id: id.clone(),
                                phase: s.phase,
                                segment,
                                values: meta.iter().copied().chain(f.values().copied()).collect(),
                            })
                        })
                        .collect()
                };
                Ok((rows(&stats)?, rows(&train)?))
            })
            .collect::<Result<_>>()
            .data()?;

        let names: Vec<String> = META_FEATURES.iter().map(|s| s.to_string()).chain(ecg_names).collect();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (x, y) in per_patient {
            a.extend(x);
            b.extend(y);
        }
        FeatureTable { names: names.clone(), rows: a }.write(&self.path(art::FEATURES_STATS)).data()?;
        FeatureTable { names, rows: b }.write(&self.path(art::FEATURES_TRAIN)).data()?;
        log::info!("features: {} patients", order.len());
        Ok(())
    }

    pub fn stats(&self) -> Result<()> {
        if !self.needs("stats", &[art::VOLCANO.into()]) {
            return Ok(());
        }
        let table = FeatureTable::read(&self.require(art::FEATURES_STATS)?).data()?;
        let ecg: Vec<usize> = (0..table.names.len())
            .filter(|&j| !META_FEATURES.contains(&table.names[j].as_str()))
            .collect();
        let phase_vectors = |phase: Phase| -> Vec<(String, FeatureVector)> {
            let mut ids: Vec<&str> = Vec::new();
            for r in table.rows.iter().filter(|r| r.phase == phase) {
                if !ids.contains(&r.patient_id.as_str()) {
                    ids.push(&r.patient_id);
                }
            }
            ids.into_iter()
                .map(|id| {
                    let rows: Vec<&FeatureRow> =
                        table.rows.iter().filter(|r| r.phase == phase && r.patient_id == id).collect();
                    let fv = ecg
                        .iter()
                        .map(|&j| (table.names[j].clone(), mean_present(rows.iter().map(|r| r.values[j]))))
                        .collect();
                    (id.to_string(), fv)
                })
                .collect()
        };
        let paired = PairedFeatureTable::align(&phase_vectors(Phase::Pre), &phase_vectors(Phase::Post));
        if paired.n() < 3 {
            return Err(anyhow!("only {} patients have both phases; the paired test needs 3", paired.n())).degenerate();
        }
        let rows = volcano(&paired, &self.cfg.volcano);
        let file = std::fs::File::create(self.path(art::VOLCANO)).context("creating volcano table").data()?;
        write_volcano_csv(&rows, file).data()?;
        log::info!(
            "stats: {} patients, {} of {} features significant",
            paired.n(),
            rows.iter().filter(|r| r.significant).count(),
            rows.len()
        );
        Ok(())
    }

    fn train_targets(&self) -> Vec<(Phase, FeatureSet)> {
        let phases = self.phases.clone().unwrap_or_else(|| self.cfg.train.phases.clone());
        let sets = self.feature_sets.clone().unwrap_or_else(|| self.cfg.train.feature_sets.clone());
        phases.iter().flat_map(|&p| sets.iter().map(move |&s| (p, s))).collect()
    }

    pub fn train(&self) -> Result<()> {
        let targets = self.train_targets();
        let outputs: Vec<String> = targets
            .iter()
            .flat_map(|(p, s)| [art::cv_json(*p, &s.to_string()), art::roc_csv(*p, &s.to_string())])
            .collect();
        if !self.needs("train", &outputs) {
            return Ok(());
        }
        let manifest = self.manifest()?;
        let features = FeatureTable::read(&self.require(art::FEATURES_TRAIN)?).data()?;
        let rows = features
            .rows
            .into_iter()
            .filter_map(|r| {
                let label = manifest.get(&r.patient_id)?.afr_label?;
                Some(CohortRow {
                    patient_id: r.patient_id,
                    phase: r.phase,
                    segment: r.segment,
                    label,
                    values: r.values,
                })
            })
            .collect();
        let table = CohortTable {
            feature_names: features.names,
            rows,
        };
        let cv = self.cfg.train.cv(self.cfg.seed);
        for (phase, set) in targets {
            let report = nested_cv(&table, set, phase, &cv)
                .map_err(|e| {
                    let kind = ExitKind::of_learn(&e);
                    anyhow::Error::new(e).context(format!("{phase} {set} model")).context(kind)
                })?;
            art::write_json(&self.path(&art::cv_json(phase, &set.to_string())), &report).data()?;
            write_roc(&self.path(&art::roc_csv(phase, &set.to_string())), &report).data()?;
            log::info!("train: {phase} {set}: mean outer AUROC {:.3}", report.mean_auc);
        }
        Ok(())
    }

    pub fn report(&self) -> Result<()> {
        if !self.needs("report", &[art::REPORT_JSON.into(), art::REPORT_MD.into()]) {
            return Ok(());
        }
        let exclusions: ExclusionReport = art::read_json(&self.require(art::EXCLUSIONS)?).data()?;
        let volcano = match self.path(art::VOLCANO) {
            p if p.exists() => Some(read_volcano_summary(&p).data()?),
            _ => None,
        };
        let mut models = Vec::new();
        let every = [Phase::Pre, Phase::Post]
            .into_iter()
            .flat_map(|p| [FeatureSet::Meta, FeatureSet::Ecg, FeatureSet::MetaEcg].map(|s| (p, s)));
        for (phase, set) in every {
            let p = self.path(&art::cv_json(phase, &set.to_string()));
            if !p.exists() {
                continue;
            }
            let r: CvReport = art::read_json(&p).data()?;
            models.push(ModelSummary {
                phase,
                feature_set: set,
                mean_auc: r.mean_auc,
                pooled_auc: r.pooled_auc,
                scored_folds: r.folds.iter().filter(|f| f.auc.is_some()).count(),
                skipped_folds: r.folds.iter().filter(|f| f.skipped.is_some()).count(),
                n_patients: r.n_patients,
            });
        }
        let report = Report {
            input: exclusions.input,
            processed: exclusions.processed,
            corrupted: exclusions.corrupted,
            low_quality: exclusions.low_quality,
            volcano,
            models,
        };
        art::write_json(&self.path(art::REPORT_JSON), &report).data()?;
        art::write_text(&self.path(art::REPORT_MD), &report.markdown()).data()?;
        Ok(())
    }
}

fn mean_present(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn write_roc(path: &Path, report: &CvReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["fold", "threshold", "fpr", "tpr"])?;
    for f in &report.folds {
        for p in &f.roc {
            w.write_record([f.fold.to_string(), p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolcanoSummary {
    pub n_features: usize,
    pub n_tested: usize,
    pub n_significant: usize,
    pub significant: Vec<String>,
}

fn read_volcano_summary(path: &Path) -> Result<VolcanoSummary> {
    let mut r = csv::Reader::from_path(path)?;
    let h = r.headers()?.clone();
    let col = |name: &str| h.iter().position(|c| c == name).ok_or_else(|| anyhow!("volcano table lacks {name}"));
    let (fc, pc, sc) = (col("feature")?, col("p_value")?, col("significant")?);
    let mut s = VolcanoSummary {
        n_features: 0,
        n_tested: 0,
        n_significant: 0,
        significant: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        s.n_features += 1;
        if !rec[pc].is_empty() {
            s.n_tested += 1;
        }
        if &rec[sc] == "true" {
            s.n_significant += 1;
            s.significant.push(rec[fc].to_string());
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub phase: Phase,
    pub feature_set: FeatureSet,
    pub n_patients: usize,
    pub mean_auc: f64,
    pub pooled_auc: Option<f64>,
    pub scored_folds: usize,
    pub skipped_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub input: usize,
    pub processed: usize,
    pub corrupted: usize,
    pub low_quality: usize,
    pub volcano: Option<VolcanoSummary>,
    pub models: Vec<ModelSummary>,
}

impl Report {
    pub fn markdown(&self) -> String {
        let mut s = String::from("# Cohort report\n\n## Recordings\n\n");
        s += &format!(
            "| input | processed | corrupted | low quality |\n|---|---|---|---|\n| {} | {} | {} | {} |\n",
            self.input, self.processed, self.corrupted, self.low_quality
        );
        if let Some(v) = &self.volcano {
            s += &format!(
                "\n## Pre vs post\n\n{} of {} tested features significant ({} total).\n",
                v.n_significant, v.n_tested, v.n_features
            );
            for f in &v.significant {
                s += &format!("- {f}\n");
            }
        }
        if !self.models.is_empty() {
            s += "\n## Models\n\n| phase | features | patients | mean AUROC | pooled AUROC | folds scored |\n|---|---|---|---|---|---|\n";
            for m in &self.models {
                s += &format!(
                    "| {} | {} | {} | {:.3} | {} | {} |\n",
                    m.phase,
                    m.feature_set,
                    m.n_patients,
                    m.mean_auc,
                    m.pooled_auc.map(|a| format!("{a:.3}")).unwrap_or_else(|| "-".into()),
                    m.scored_folds
                );
            }
        }
        s
    }
}
