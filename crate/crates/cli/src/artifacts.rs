//! CSV and JSON artifacts exchanged between pipeline stages.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ecgrisk_core::{Phase, ScoredSegment, LEADS};
use serde::{Deserialize, Serialize};

pub const INGEST: &str = "ingest.csv";
pub const SEGMENTS_STATS: &str = "segments_stats.csv";
pub const SEGMENTS_TRAIN: &str = "segments_train.csv";
pub const EXCLUSIONS: &str = "exclusions.json";
pub const FEATURES_STATS: &str = "features_stats.csv";
pub const FEATURES_TRAIN: &str = "features_train.csv";
pub const VOLCANO: &str = "volcano.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";

pub fn cv_json(phase: Phase, set: &str) -> String {
    format!("cv_{phase}_{}.json", set.replace('+', "_"))
}

pub fn roc_csv(phase: Phase, set: &str) -> String {
    format!("roc_{phase}_{}.csv", set.replace('+', "_"))
}

pub fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn parse_cell(s: &str) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    Ok(Some(s.parse::<f64>().with_context(|| format!("bad number {s:?}"))?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestRow {
    pub patient_id: String,
    /// `ok` or `corrupted`.
    pub status: String,
    pub reason: String,
    pub duration_s: Option<f64>,
    pub fs: Option<f64>,
}

pub fn write_ingest(path: &Path, rows: &[IngestRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ingest(path: &Path) -> Result<Vec<IngestRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub patient_id: String,
    /// `corrupted` or `low_quality`.
    pub category: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub input: usize,
    pub processed: usize,
    pub corrupted: usize,
    pub low_quality: usize,
    pub excluded: Vec<Exclusion>,
}

pub fn segment_header() -> Vec<String> {
    ["patient_id", "phase", "start_s", "dur_s", "bsqi_mean"]
        .iter()
        .map(|s| s.to_string())
        .chain(LEADS.iter().map(|l| format!("bsqi_{l}")))
        .collect()
}

pub fn write_segments(path: &Path, segments: &[ScoredSegment]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(segment_header())?;
    for s in segments {
        let mut row = vec![
            s.patient_id.clone(),
            s.phase.to_string(),
            s.start_s.to_string(),
            s.dur_s.to_string(),
            s.bsqi_mean.to_string(),
        ];
        row.extend(s.per_lead_bsqi.iter().map(f64::to_string));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_segments(path: &Path) -> Result<Vec<ScoredSegment>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 17 {
            bail!("{}: expected 17 columns, found {}", path.display(), rec.len());
        }
        let num = |i: usize| -> Result<f64> { parse_cell(&rec[i])?.context("empty number in segment row") };
        let mut per_lead = [0.0; 12];
        for (k, slot) in per_lead.iter_mut().enumerate() {
            *slot = num(5 + k)?;
        }
        out.push(ScoredSegment {
            patient_id: rec[0].to_string(),
            phase: rec[1].parse().map_err(anyhow::Error::msg)?,
            start_s: num(2)?,
            dur_s: num(3)?,
            bsqi_mean: num(4)?,
            per_lead_bsqi: per_lead,
        });
    }
    Ok(out)
}

/// Feature rows: one per (patient, phase, segment).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub patient_id: String,
    pub phase: Phase,
    pub segment: usize,
    pub values: Vec<Option<f64>>,
}

const KEY_COLUMNS: [&str; 3] = ["patient_id", "phase", "segment"];

impl FeatureTable {
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(KEY_COLUMNS.iter().map(|s| s.to_string()).chain(self.names.iter().cloned()))?;
        for r in &self.rows {
            let mut rec = vec![r.patient_id.clone(), r.phase.to_string(), r.segment.to_string()];
            rec.extend(r.values.iter().map(|&v| cell(v)));
            w.write_record(rec)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header = r.headers()?.clone();
        if header.len() < 3 || header.iter().take(3).ne(KEY_COLUMNS) {
            bail!("{}: first columns must be {}", path.display(), KEY_COLUMNS.join(","));
        }
        let names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            rows.push(FeatureRow {
                patient_id: rec[0].to_string(),
                phase: rec[1].parse().map_err(anyhow::Error::msg)?,
                segment: rec[2].parse().with_context(|| format!("bad segment index {:?}", &rec[2]))?,
                values: rec.iter().skip(3).map(parse_cell).collect::<Result<_>>()?,
            });
        }
        Ok(Self { names, rows })
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("writing {}", path.display()))?);
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}
