//! Multi-lead recordings, their on-disk formats, and the cohort manifest.
//!
//! Two recording formats are supported:
//!
//! * flat binary: `<stem>.bin` holding little-endian `i32` samples,
//!   lead-interleaved, next to a `<stem>.json` header;
//! * CSV: optional `#key=value` metadata lines, a header row of lead names,
//!   then one row per sample with amplitudes in microvolts.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard 12-lead order.
pub const LEADS: [&str; 12] = [
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6",
];

pub const N_LEADS: usize = 12;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("expected 12 leads in standard order, found {found}")]
    LeadCountMismatch { found: usize },
    #[error("truncated data: header declares {declared} samples per lead, found {actual}")]
    TruncatedData { declared: usize, actual: usize },
    #[error("window [{start_s}, {end_s}) s exceeds recording of {duration_s} s")]
    OutOfBounds {
        start_s: f64,
        end_s: f64,
        duration_s: f64,
    },
    #[error("recording of {duration_s} s is shorter than the required {required_s} s")]
    TooShort { duration_s: f64, required_s: f64 },
    #[error("invalid recording: {0}")]
    Invalid(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("duplicate patient id in manifest: {0}")]
    DuplicatePatient(String),
    #[error("bad AFR label {label:?} for patient {patient_id}")]
    BadLabel { patient_id: String, label: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RecordError + '_ {
    move |source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// An immutable 12-lead recording, amplitudes in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    patient_id: String,
    samples: Vec<Vec<f64>>,
    fs: f64,
    quant: f64,
}

impl Recording {
    pub fn new(
        patient_id: impl Into<String>,
        samples: Vec<Vec<f64>>,
        fs: f64,
        quant: f64,
    ) -> Result<Self, RecordError> {
        if samples.len() != N_LEADS {
            return Err(RecordError::LeadCountMismatch {
                found: samples.len(),
            });
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(RecordError::Invalid(format!("sampling rate {fs}")));
        }
        if !(quant > 0.0 && quant.is_finite()) {
            return Err(RecordError::Invalid(format!("quantization step {quant}")));
        }
        let n = samples[0].len();
        if let Some(bad) = samples.iter().find(|lead| lead.len() != n) {
            return Err(RecordError::Invalid(format!(
                "unequal lead lengths ({} vs {n})",
                bad.len()
            )));
        }
        Ok(Self {
            patient_id: patient_id.into(),
            samples,
            fs,
            quant,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn quant(&self) -> f64 {
        self.quant
    }

    pub fn leads(&self) -> &'static [&'static str; 12] {
        &LEADS
    }

    pub fn lead(&self, idx: usize) -> &[f64] {
        &self.samples[idx]
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn sample_count(&self) -> usize {
        self.samples[0].len()
    }

    pub fn duration_s(&self) -> f64 {
        self.sample_count() as f64 / self.fs
    }

    /// Slice `[start_s, start_s + dur_s)` out of every lead.
    pub fn window(&self, start_s: f64, dur_s: f64) -> Result<Recording, RecordError> {
        let oob = || RecordError::OutOfBounds {
            start_s,
            end_s: start_s + dur_s,
            duration_s: self.duration_s(),
        };
        if !(start_s >= 0.0 && dur_s >= 0.0) || !(start_s + dur_s).is_finite() {
            return Err(oob());
        }
        let start = (start_s * self.fs).round() as usize;
        let len = (dur_s * self.fs).round() as usize;
        if start + len > self.sample_count() {
            return Err(oob());
        }
        let samples = self
            .samples
            .iter()
            .map(|lead| lead[start..start + len].to_vec())
            .collect();
        Ok(Recording {
            patient_id: self.patient_id.clone(),
            samples,
            fs: self.fs,
            quant: self.quant,
        })
    }

    /// First and last `region_s` seconds. Both regions must be disjoint.
    pub fn pre_post_regions(&self, region_s: f64) -> Result<(Recording, Recording), RecordError> {
        let duration_s = self.duration_s();
        if duration_s + 1e-9 < 2.0 * region_s {
            return Err(RecordError::TooShort {
                duration_s,
                required_s: 2.0 * region_s,
            });
        }
        let region_len = (region_s * self.fs).round() as usize;
        let post_start = (self.sample_count() - region_len) as f64 / self.fs;
        Ok((self.window(0.0, region_s)?, self.window(post_start, region_s)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Binary,
    Csv,
}

impl Format {
    /// `.csv` means CSV; `.bin` or `.json` means flat binary.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "bin" | "json" => Some(Format::Binary),
            _ => None,
        }
    }
}

/// Sidecar header of the flat-binary format.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BinaryHeader {
    pub patient_id: String,
    pub fs: f64,
    pub quant: f64,
    pub leads: Vec<String>,
    pub n_samples: usize,
}

fn check_leads<S: AsRef<str>>(names: &[S]) -> Result<(), RecordError> {
    if names.len() != N_LEADS {
        return Err(RecordError::LeadCountMismatch { found: names.len() });
    }
    for (got, want) in names.iter().zip(LEADS) {
        if got.as_ref().trim() != want {
            return Err(RecordError::MalformedHeader(format!(
                "lead {:?} where {want:?} expected",
                got.as_ref()
            )));
        }
    }
    Ok(())
}

fn binary_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("json"), path.with_extension("bin"))
}

pub fn load_recording(path: &Path, format: Format) -> Result<Recording, RecordError> {
    match format {
        Format::Binary => load_binary(path),
        Format::Csv => load_csv(path),
    }
}

pub fn save_recording(rec: &Recording, path: &Path, format: Format) -> Result<(), RecordError> {
    match format {
        Format::Binary => save_binary(rec, path),
        Format::Csv => save_csv(rec, path),
    }
}

fn load_binary(path: &Path) -> Result<Recording, RecordError> {
    let (json_path, bin_path) = binary_paths(path);
    let text = std::fs::read_to_string(&json_path).map_err(io_err(&json_path))?;
    let header: BinaryHeader = serde_json::from_str(&text)
        .map_err(|e| RecordError::MalformedHeader(format!("{}: {e}", json_path.display())))?;
    check_leads(&header.leads)?;

    let mut bytes = Vec::new();
    File::open(&bin_path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(&bin_path))?;
    let frame = 4 * N_LEADS;
    if bytes.len() % frame != 0 || bytes.len() / frame != header.n_samples {
        return Err(RecordError::TruncatedData {
            declared: header.n_samples,
            actual: bytes.len() / frame,
        });
    }
    let mut samples: Vec<Vec<f64>> = (0..N_LEADS).map(|_| Vec::with_capacity(header.n_samples)).collect();
    for chunk in bytes.chunks_exact(frame) {
        for (lead, raw) in samples.iter_mut().zip(chunk.chunks_exact(4)) {
            let value = i32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]);
            lead.push(value as f64 * header.quant);
        }
    }
    Recording::new(header.patient_id, samples, header.fs, header.quant)
}

fn save_binary(rec: &Recording, path: &Path) -> Result<(), RecordError> {
    let (json_path, bin_path) = binary_paths(path);
    let header = BinaryHeader {
        patient_id: rec.patient_id.clone(),
        fs: rec.fs,
        quant: rec.quant,
        leads: LEADS.iter().map(|s| s.to_string()).collect(),
        n_samples: rec.sample_count(),
    };
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    std::fs::write(&json_path, json).map_err(io_err(&json_path))?;

    let file = File::create(&bin_path).map_err(io_err(&bin_path))?;
    let mut out = BufWriter::new(file);
    for i in 0..rec.sample_count() {
        for lead in &rec.samples {
            let raw = (lead[i] / rec.quant).round();
            if raw < i32::MIN as f64 || raw > i32::MAX as f64 {
                return Err(RecordError::Invalid(format!(
                    "amplitude {} µV overflows i32 at quantization {}",
                    lead[i], rec.quant
                )));
            }
            out.write_all(&(raw as i32).to_le_bytes())
                .map_err(io_err(&bin_path))?;
        }
    }
    out.flush().map_err(io_err(&bin_path))
}

fn load_csv(path: &Path) -> Result<Recording, RecordError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);

    let mut patient_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    let mut fs = None;
    let mut quant = None;
    let mut declared = None;

    // Metadata lines precede the lead-name header row.
    let mut line = String::new();
    let header_line = loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(io_err(path))?;
        if n == 0 {
            return Err(RecordError::MalformedHeader("missing lead header row".into()));
        }
        let trimmed = line.trim();
        if let Some(meta) = trimmed.strip_prefix('#') {
            let (key, value) = meta
                .split_once('=')
                .ok_or_else(|| RecordError::MalformedHeader(format!("bad metadata line {trimmed:?}")))?;
            let value = value.trim();
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| RecordError::MalformedHeader(format!("bad value {value:?} for {key}")))
            };
            match key.trim() {
                "patient_id" => patient_id = value.to_string(),
                "fs" => fs = Some(num()?),
                "quant" => quant = Some(num()?),
                "n_samples" => {
                    declared = Some(value.parse::<usize>().map_err(|_| {
                        RecordError::MalformedHeader(format!("bad n_samples {value:?}"))
                    })?)
                }
                _ => {}
            }
        } else if !trimmed.is_empty() {
            break trimmed.to_string();
        }
    };
    let names: Vec<&str> = header_line.split(',').collect();
    check_leads(&names)?;
    let fs = fs.ok_or_else(|| RecordError::MalformedHeader("missing #fs".into()))?;
    let quant = quant.unwrap_or(1.0);

    let mut samples = vec![Vec::new(); N_LEADS];
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| RecordError::MalformedHeader(format!("row {row_idx}: {e}")))?;
        if record.len() != N_LEADS {
            return Err(RecordError::LeadCountMismatch {
                found: record.len(),
            });
        }
        for (lead, field) in samples.iter_mut().zip(record.iter()) {
            let v = field.trim().parse::<f64>().map_err(|_| {
                RecordError::MalformedHeader(format!("row {row_idx}: bad amplitude {field:?}"))
            })?;
            lead.push(v);
        }
    }
    let actual = samples[0].len();
    if let Some(declared) = declared {
        if declared != actual {
            return Err(RecordError::TruncatedData { declared, actual });
        }
    }
    Recording::new(patient_id, samples, fs, quant)
}

fn save_csv(rec: &Recording, path: &Path) -> Result<(), RecordError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>, s: String| out.write_all(s.as_bytes()).map_err(io_err(path));
    write(&mut out, format!("#patient_id={}\n", rec.patient_id))?;
    write(&mut out, format!("#fs={}\n", rec.fs))?;
    write(&mut out, format!("#quant={}\n", rec.quant))?;
    write(&mut out, format!("#n_samples={}\n", rec.sample_count()))?;
    write(&mut out, format!("{}\n", LEADS.join(",")))?;
    let mut row = String::new();
    for i in 0..rec.sample_count() {
        row.clear();
        for (k, lead) in rec.samples.iter().enumerate() {
            if k > 0 {
                row.push(',');
            }
            // `{}` on f64 prints the shortest representation that parses back exactly.
            row.push_str(&lead[i].to_string());
        }
        row.push('\n');
        out.write_all(row.as_bytes()).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub patient_id: String,
    pub recording_path: PathBuf,
    pub afr_label: Option<u8>,
    pub age: Option<f64>,
    pub sex: Option<Sex>,
    pub followup_days: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CohortManifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_COLUMNS: [&str; 6] = [
    "patient_id",
    "recording_path",
    "afr_label",
    "age",
    "sex",
    "followup_days",
];

impl CohortManifest {
    pub fn labeled(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.afr_label.is_some())
    }

    pub fn get(&self, patient_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.patient_id == patient_id)
    }
}

/// Parse a cohort manifest. Relative recording paths resolve against the
/// manifest's directory.
pub fn load_manifest(path: &Path) -> Result<CohortManifest, RecordError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| RecordError::Manifest(e.to_string()))?;
    let headers = rdr
        .headers()
        .map_err(|e| RecordError::Manifest(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let pid_col = col("patient_id").ok_or_else(|| RecordError::Manifest("missing column patient_id".into()))?;
    let path_col =
        col("recording_path").ok_or_else(|| RecordError::Manifest("missing column recording_path".into()))?;
    let (label_col, age_col, sex_col, fu_col) = (col("afr_label"), col("age"), col("sex"), col("followup_days"));
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| RecordError::Manifest(e.to_string()))?;
        let field = |c: Option<usize>| {
            c.and_then(|c| record.get(c))
                .map(str::trim)
                .filter(|s| !s.is_empty() && !s.eq_ignore_ascii_case("na") && !s.eq_ignore_ascii_case("nan"))
        };
        let patient_id = field(Some(pid_col))
            .ok_or_else(|| RecordError::Manifest("empty patient_id".into()))?
            .to_string();
        if !seen.insert(patient_id.clone()) {
            return Err(RecordError::DuplicatePatient(patient_id));
        }
        let rel = field(Some(path_col))
            .ok_or_else(|| RecordError::Manifest(format!("empty recording_path for {patient_id}")))?;
        let recording_path = if Path::new(rel).is_absolute() {
            PathBuf::from(rel)
        } else {
            base.join(rel)
        };
        let afr_label = match field(label_col) {
            None => None,
            Some("0") => Some(0),
            Some("1") => Some(1),
            Some(other) => {
                return Err(RecordError::BadLabel {
                    patient_id,
                    label: other.to_string(),
                })
            }
        };
        let number = |c: Option<usize>, what: &str| -> Result<Option<f64>, RecordError> {
            field(c)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| RecordError::Manifest(format!("bad {what} {s:?} for {patient_id}")))
                })
                .transpose()
        };
        let age = number(age_col, "age")?;
        let followup_days = number(fu_col, "followup_days")?;
        let sex = match field(sex_col) {
            None => None,
            Some(s) if s.eq_ignore_ascii_case("m") => Some(Sex::M),
            Some(s) if s.eq_ignore_ascii_case("f") => Some(Sex::F),
            Some(s) => return Err(RecordError::Manifest(format!("bad sex {s:?} for {patient_id}"))),
        };
        entries.push(ManifestEntry {
            patient_id,
            recording_path,
            afr_label,
            age,
            sex,
            followup_days,
        });
    }
    Ok(CohortManifest { entries })
}

/// Write a manifest with recording paths as given (callers pass paths relative
/// to the manifest's directory when they want a relocatable cohort).
pub fn save_manifest(manifest: &CohortManifest, path: &Path) -> Result<(), RecordError> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| RecordError::Manifest(e.to_string()))?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    wtr.write_record(MANIFEST_COLUMNS)
        .map_err(|e| RecordError::Manifest(e.to_string()))?;
    for e in &manifest.entries {
        wtr.write_record([
            e.patient_id.clone(),
            e.recording_path.display().to_string(),
            e.afr_label.map(|l| l.to_string()).unwrap_or_default(),
            opt(e.age),
            match e.sex {
                Some(Sex::M) => "M".into(),
                Some(Sex::F) => "F".into(),
                None => String::new(),
            },
            opt(e.followup_days),
        ])
        .map_err(|e| RecordError::Manifest(e.to_string()))?;
    }
    wtr.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(n: usize, fs: f64) -> Recording {
        let samples = (0..N_LEADS)
            .map(|l| (0..n).map(|i| ((i * (l + 1)) % 97) as f64 * 0.03).collect())
            .collect();
        Recording::new("p1", samples, fs, 0.03).unwrap()
    }

    #[test]
    fn csv_duration_from_sample_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        let rec = ramp(600_000, 2000.0);
        save_recording(&rec, &path, Format::Csv).unwrap();
        let back = load_recording(&path, Format::Csv).unwrap();
        assert_eq!(back.duration_s(), 300.0);
        assert_eq!(back, rec);
    }

    #[test]
    fn csv_with_eleven_columns_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let names = LEADS[..11].join(",");
        std::fs::write(&path, format!("#fs=500\n{names}\n{}\n", ["1"; 11].join(","))).unwrap();
        assert!(matches!(
            load_recording(&path, Format::Csv),
            Err(RecordError::LeadCountMismatch { found: 11 })
        ));
    }

    #[test]
    fn binary_raw_counts_scale_by_quant() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("q");
        let header = BinaryHeader {
            patient_id: "q".into(),
            fs: 2000.0,
            quant: 0.03,
            leads: LEADS.iter().map(|s| s.to_string()).collect(),
            n_samples: 1,
        };
        std::fs::write(stem.with_extension("json"), serde_json::to_string(&header).unwrap()).unwrap();
        let bytes: Vec<u8> = (0..N_LEADS).flat_map(|_| 100i32.to_le_bytes()).collect();
        std::fs::write(stem.with_extension("bin"), bytes).unwrap();
        let rec = load_recording(&stem, Format::Binary).unwrap();
        assert!((rec.lead(0)[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn binary_truncation_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("t");
        save_recording(&ramp(100, 500.0), &stem, Format::Binary).unwrap();
        let bin = stem.with_extension("bin");
        let mut bytes = std::fs::read(&bin).unwrap();
        bytes.truncate(bytes.len() - 48);
        std::fs::write(&bin, bytes).unwrap();
        assert!(matches!(
            load_recording(&stem, Format::Binary),
            Err(RecordError::TruncatedData { declared: 100, actual: 99 })
        ));
    }

    #[test]
    fn first_and_last_five_minutes() {
        let rec = ramp(3600 * 10, 10.0);
        let first = rec.window(0.0, 300.0).unwrap();
        assert_eq!(first.lead(3), &rec.lead(3)[..3000]);
        let last = rec.window(rec.duration_s() - 300.0, 300.0).unwrap();
        assert_eq!(last.lead(3), &rec.lead(3)[rec.sample_count() - 3000..]);
        assert_eq!(last.fs(), rec.fs());
        assert_eq!(last.quant(), rec.quant());
    }

    #[test]
    fn window_past_end_is_out_of_bounds() {
        let rec = ramp(2000, 10.0);
        assert!(matches!(rec.window(0.0, 300.0), Err(RecordError::OutOfBounds { .. })));
    }

    #[test]
    fn short_recordings_have_no_disjoint_regions() {
        let rec = ramp(5000, 10.0);
        assert!(matches!(rec.pre_post_regions(300.0), Err(RecordError::TooShort { .. })));
        let (pre, post) = ramp(6000, 10.0).pre_post_regions(300.0).unwrap();
        assert_eq!(pre.sample_count(), 3000);
        assert_eq!(post.sample_count(), 3000);
    }

    fn write_manifest(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("manifest.csv");
        std::fs::write(&path, format!("{}\n{body}", MANIFEST_COLUMNS.join(","))).unwrap();
        path
    }

    #[test]
    fn manifest_counts_labeled_entries() {
        let dir = tempfile::tempdir().unwrap();
        let body: String = (0..50)
            .map(|i| {
                let label = if i < 43 { (i % 2).to_string() } else { String::new() };
                format!("p{i},r{i}.csv,{label},60,M,200\n")
            })
            .collect();
        let m = load_manifest(&write_manifest(dir.path(), &body)).unwrap();
        assert_eq!(m.entries.len(), 50);
        assert_eq!(m.labeled().count(), 43);
        assert_eq!(m.entries[0].recording_path, dir.path().join("r0.csv"));
    }

    #[test]
    fn manifest_missing_age_is_none() {
        let dir = tempfile::tempdir().unwrap();
        let m = load_manifest(&write_manifest(dir.path(), "a,a.csv,1,,F,\n")).unwrap();
        assert_eq!(m.entries[0].age, None);
        assert_eq!(m.entries[0].sex, Some(Sex::F));
        assert_eq!(m.entries[0].followup_days, None);
    }

    #[test]
    fn manifest_rejects_duplicates_and_bad_labels() {
        let dir = tempfile::tempdir().unwrap();
        let dup = write_manifest(dir.path(), "a,a.csv,1,,,\na,b.csv,0,,,\n");
        assert!(matches!(load_manifest(&dup), Err(RecordError::DuplicatePatient(p)) if p == "a"));
        let bad = write_manifest(dir.path(), "a,a.csv,2,,,\n");
        assert!(matches!(load_manifest(&bad), Err(RecordError::BadLabel { .. })));
    }

    #[test]
    fn manifest_with_only_required_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "recording_path,patient_id\nx.bin,x\n").unwrap();
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.entries[0].patient_id, "x");
        assert_eq!(m.entries[0].afr_label, None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn window_of_window_is_identity(n in 200usize..800, s in 0usize..100, d in 1usize..100) {
            let rec = ramp(n, 10.0);
            let w = rec.window(s as f64 / 10.0, d as f64 / 10.0).unwrap();
            let again = w.window(0.0, d as f64 / 10.0).unwrap();
            prop_assert_eq!(w.samples(), again.samples());
        }

        #[test]
        fn formats_round_trip_bit_exactly(raw in proptest::collection::vec(-2_000_000i32..2_000_000, 12 * 4..12 * 40), csv in any::<bool>()) {
            let n = raw.len() / 12;
            let samples: Vec<Vec<f64>> = (0..12)
                .map(|l| (0..n).map(|i| raw[i * 12 + l] as f64 * 0.03).collect())
                .collect();
            let rec = Recording::new("rt", samples, 2000.0, 0.03).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let (path, fmt) = if csv {
                (dir.path().join("rt.csv"), Format::Csv)
            } else {
                (dir.path().join("rt"), Format::Binary)
            };
            save_recording(&rec, &path, fmt).unwrap();
            let back = load_recording(&path, fmt).unwrap();
            for (a, b) in rec.samples().iter().zip(back.samples()) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}
