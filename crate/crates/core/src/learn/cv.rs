//! Patient-grouped nested cross-validation.
//!
//! Each outer fold fits the imputer, scaler and mRMR ranking on its training
//! patients only, tunes the forest (and the number of ranked features) on
//! inner folds of those patients, refits on all of them and scores the
//! held-out patients by aggregating their segment probabilities.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::{rf_train, ClassWeight, HyperParams, SplitFeatures};
use super::mrmr::{mrmr_select, MrmrForm};
use super::preprocess::{MedianImputer, Standardizer};
use super::roc::{aggregate, roc_auc, Aggregation, RocPoint};
use super::search::{hyper_search, Dim};
use super::{derive_seed, LearnError};
use crate::features::META_FEATURES;
use crate::quality::Phase;

pub const MAX_SEGMENTS: usize = 5;
pub const DEFAULT_K_GRID: [usize; 5] = [3, 5, 8, 13, 21];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub patient_id: String,
    pub phase: Phase,
    pub segment: usize,
    pub label: u8,
    pub values: Vec<Option<f64>>,
}

/// One row per (patient, phase, segment) with a per-patient label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<CohortRow>,
}

impl CohortTable {
    pub fn validate(&self) -> Result<(), LearnError> {
        let mut labels: HashMap<&str, u8> = HashMap::new();
        let mut segments: HashMap<(&str, Phase), usize> = HashMap::new();
        for r in &self.rows {
            if *labels.entry(&r.patient_id).or_insert(r.label) != r.label || r.label > 1 {
                return Err(LearnError::InconsistentLabels(r.patient_id.clone()));
            }
            let n = segments.entry((&r.patient_id, r.phase)).or_insert(0);
            *n += 1;
            if *n > MAX_SEGMENTS {
                return Err(LearnError::TooManySegments(r.patient_id.clone()));
            }
            if r.values.len() != self.feature_names.len() {
                return Err(LearnError::InvalidConfig(format!(
                    "row for {} has {} values, expected {}",
                    r.patient_id,
                    r.values.len(),
                    self.feature_names.len()
                )));
            }
        }
        Ok(())
    }

    /// Patients with rows in `phase`, with their labels, in first-appearance order.
    pub fn patients(&self, phase: Phase) -> Vec<(String, u8)> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .filter(|r| r.phase == phase && seen.insert(r.patient_id.clone()))
            .map(|r| (r.patient_id.clone(), r.label))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "meta")]
    Meta,
    #[serde(rename = "ecg")]
    Ecg,
    #[serde(rename = "meta+ecg")]
    MetaEcg,
}

impl FeatureSet {
    /// Column indices of `names` that belong to this set.
    pub fn columns(&self, names: &[String]) -> Vec<usize> {
        let is_meta = |n: &String| META_FEATURES.contains(&n.as_str());
        names
            .iter()
            .enumerate()
            .filter(|(_, n)| match self {
                FeatureSet::Meta => is_meta(n),
                FeatureSet::Ecg => !is_meta(n),
                FeatureSet::MetaEcg => true,
            })
            .map(|(i, _)| i)
            .collect()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSet::Meta => "meta",
            FeatureSet::Ecg => "ecg",
            FeatureSet::MetaEcg => "meta+ecg",
        })
    }
}

impl FromStr for FeatureSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "meta" => Ok(FeatureSet::Meta),
            "ecg" => Ok(FeatureSet::Ecg),
            "meta+ecg" | "meta_ecg" | "all" => Ok(FeatureSet::MetaEcg),
            other => Err(format!("unknown feature set {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub outer_k: usize,
    pub inner_k: usize,
    /// Objective evaluations per outer fold.
    pub budget: usize,
    pub seed: u64,
    /// Candidate numbers of mRMR features.
    pub k_grid: Vec<usize>,
    pub mrmr_form: MrmrForm,
    pub aggregation: Aggregation,
    /// Record which patients every fit saw.
    pub trace: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            outer_k: 8,
            inner_k: 8,
            budget: 50,
            seed: 0,
            k_grid: DEFAULT_K_GRID.to_vec(),
            mrmr_form: MrmrForm::Difference,
            aggregation: Aggregation::VoteShare,
            trace: false,
        }
    }
}

/// A fitted component and the patients whose rows it saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEvent {
    pub outer_fold: usize,
    pub inner_fold: Option<usize>,
    pub stage: String,
    pub patients: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientScore {
    pub patient_id: String,
    pub label: u8,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_patients: Vec<String>,
    pub n_train_patients: usize,
    pub n_inner_folds: usize,
    /// Why the fold was not scored, if it was skipped.
    pub skipped: Option<String>,
    pub selected_features: Vec<String>,
    pub hyperparams: Option<HyperParams>,
    pub inner_auc: Option<f64>,
    pub auc: Option<f64>,
    pub roc: Vec<RocPoint>,
    pub scores: Vec<PatientScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub phase: Phase,
    pub feature_set: FeatureSet,
    pub config: CvConfig,
    pub n_patients: usize,
    pub folds: Vec<FoldReport>,
    /// Arithmetic mean of the scored outer-fold AUROCs.
    pub mean_auc: f64,
    /// AUROC over all held-out patient scores pooled together.
    pub pooled_auc: Option<f64>,
    pub trace: Vec<FitEvent>,
}

/// Stratified, patient-grouped folds: each class is shuffled with `seed`,
/// positives then negatives are dealt round-robin. Returns indices into `patients`.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (n, i) in pos.into_iter().chain(neg).enumerate() {
        folds[n % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Search dimensions: trees, depth, leaf size, split rule, split fraction,
/// class weight, index into the feature-count grid.
fn search_space(grid_len: usize) -> Vec<Dim> {
    vec![
        Dim::Int { lo: HyperParams::TREES.0 as i64, hi: HyperParams::TREES.1 as i64 },
        Dim::Int { lo: HyperParams::DEPTH.0 as i64, hi: HyperParams::DEPTH.1 as i64 },
        Dim::Int { lo: HyperParams::LEAF.0 as i64, hi: HyperParams::LEAF.1 as i64 },
        Dim::Cat { n: 3 },
        Dim::Float { lo: 0.1, hi: 1.0 },
        Dim::Cat { n: 2 },
        Dim::Cat { n: grid_len },
    ]
}

fn decode(values: &[f64], grid: &[usize]) -> (HyperParams, usize) {
    let hp = HyperParams {
        n_trees: values[0] as usize,
        max_depth: values[1] as usize,
        min_leaf: values[2] as usize,
        features_per_split: match values[3] as usize {
            0 => SplitFeatures::Sqrt,
            1 => SplitFeatures::Log2,
            _ => SplitFeatures::Fraction(values[4]),
        },
        class_weight: if values[5] as usize == 0 { ClassWeight::None } else { ClassWeight::Balanced },
    };
    (hp, grid[values[6] as usize])
}

/// Rows of one group of patients, preprocessed.
struct Prepared {
    /// Patient index (into the phase's patient list) of each row.
    patient: Vec<usize>,
    labels: Vec<u8>,
    x: Vec<Vec<f64>>,
}

fn rows_of<'a>(rows: &[&'a CohortRow], members: &[bool], patient_of: &[usize]) -> Vec<(usize, &'a CohortRow)> {
    rows.iter()
        .zip(patient_of)
        .filter(|(_, &p)| members[p])
        .map(|(r, &p)| (p, *r))
        .collect()
}

fn select_values(row: &CohortRow, cols: &[usize]) -> Vec<Option<f64>> {
    cols.iter().map(|&c| row.values[c]).collect()
}

/// Fit imputer and scaler on `train` and apply them to both groups.
fn prepare(train: &[(usize, &CohortRow)], test: &[(usize, &CohortRow)], cols: &[usize]) -> (Vec<usize>, Prepared, Prepared) {
    let raw_train: Vec<Vec<Option<f64>>> = train.iter().map(|(_, r)| select_values(r, cols)).collect();
    let raw_test: Vec<Vec<Option<f64>>> = test.iter().map(|(_, r)| select_values(r, cols)).collect();
    let imputer = MedianImputer::fit(&raw_train);
    let imputed = imputer.transform(&raw_train);
    let scaler = Standardizer::fit(&imputed);
    let kept: Vec<usize> = imputer.kept().iter().map(|&k| cols[k]).collect();
    let pack = |group: &[(usize, &CohortRow)], x: Vec<Vec<f64>>| Prepared {
        patient: group.iter().map(|(p, _)| *p).collect(),
        labels: group.iter().map(|(_, r)| r.label).collect(),
        x,
    };
    (
        kept,
        pack(train, scaler.transform(&imputed)),
        pack(test, scaler.transform(&imputer.transform(&raw_test))),
    )
}

fn project(x: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    x.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()
}

/// Patient scores for the rows of `test` under a forest trained on `train`.
fn score_patients(
    train: &Prepared,
    test: &Prepared,
    cols: &[usize],
    hp: &HyperParams,
    seed: u64,
    how: Aggregation,
) -> Result<Vec<(usize, u8, f64)>, LearnError> {
    let forest = rf_train(&project(&train.x, cols), &train.labels, hp, seed)?;
    let mut by_patient: Vec<(usize, u8, Vec<f64>)> = Vec::new();
    for ((row, &p), &label) in test.x.iter().zip(&test.patient).zip(&test.labels) {
        let x: Vec<f64> = cols.iter().map(|&c| row[c]).collect();
        let prob = forest.predict_proba(&x);
        match by_patient.iter_mut().find(|(q, _, _)| *q == p) {
            Some(entry) => entry.2.push(prob),
            None => by_patient.push((p, label, vec![prob])),
        }
    }
    Ok(by_patient
        .into_iter()
        .map(|(p, l, probs)| (p, l, aggregate(&probs, how)))
        .collect())
}

fn auc_of(scores: &[(usize, u8, f64)]) -> Option<f64> {
    let s: Vec<f64> = scores.iter().map(|t| t.2).collect();
    let l: Vec<u8> = scores.iter().map(|t| t.1).collect();
    roc_auc(&s, &l).ok().map(|r| r.auc)
}

struct InnerFold {
    /// Positions (in the outer ranking) of columns that survived the inner imputer.
    kept_rank: Vec<Option<usize>>,
    train: Prepared,
    val: Prepared,
}

/// Column positions in an inner matrix for the first `k` ranked features.
fn top_k(kept_rank: &[Option<usize>], k: usize) -> Vec<usize> {
    kept_rank.iter().take(k).flatten().copied().collect()
}

#[allow(clippy::too_many_arguments)]
fn run_outer_fold(
    fold: usize,
    test_members: &[usize],
    patients: &[(String, u8)],
    rows: &[&CohortRow],
    patient_of: &[usize],
    columns: &[usize],
    names: &[String],
    use_mrmr: bool,
    cfg: &CvConfig,
) -> Result<(FoldReport, Vec<FitEvent>), LearnError> {
    let fold_seed = derive_seed(cfg.seed, 1 + fold as u64);
    let mut is_test = vec![false; patients.len()];
    for &p in test_members {
        is_test[p] = true;
    }
    let is_train: Vec<bool> = is_test.iter().map(|t| !t).collect();
    let train_ids: Vec<usize> = (0..patients.len()).filter(|&p| is_train[p]).collect();
    let test_ids: Vec<String> = test_members.iter().map(|&p| patients[p].0.clone()).collect();
    let mut report = FoldReport {
        fold,
        test_patients: test_ids,
        n_train_patients: train_ids.len(),
        n_inner_folds: cfg.inner_k,
        skipped: None,
        selected_features: Vec::new(),
        hyperparams: None,
        inner_auc: None,
        auc: None,
        roc: Vec::new(),
        scores: Vec::new(),
    };
    let classes = |ids: &mut dyn Iterator<Item = usize>| ids.map(|p| patients[p].1).collect::<BTreeSet<u8>>().len();
    if classes(&mut test_members.iter().copied()) < 2 {
        log::warn!("outer fold {fold}: test patients hold one class; skipped");
        report.skipped = Some("single-class test fold".into());
        return Ok((report, Vec::new()));
    }
    if classes(&mut train_ids.iter().copied()) < 2 {
        report.skipped = Some("single-class training patients".into());
        return Ok((report, Vec::new()));
    }

    let mut trace = Vec::new();
    let mut record = |inner: Option<usize>, stage: &str, members: &[bool]| {
        if cfg.trace {
            let mut ids: Vec<String> = (0..patients.len()).filter(|&p| members[p]).map(|p| patients[p].0.clone()).collect();
            ids.sort();
            trace.push(FitEvent { outer_fold: fold, inner_fold: inner, stage: stage.into(), patients: ids });
        }
    };

    let train_rows = rows_of(rows, &is_train, patient_of);
    let test_rows = rows_of(rows, &is_test, patient_of);
    let (kept, outer_train, outer_test) = prepare(&train_rows, &test_rows, columns);
    record(None, "imputer", &is_train);
    record(None, "scaler", &is_train);
    if kept.is_empty() {
        return Err(LearnError::NoFeatures);
    }

    let mut grid: Vec<usize> = cfg.k_grid.iter().map(|&k| k.min(kept.len())).filter(|&k| k > 0).collect();
    grid.dedup();
    if grid.is_empty() || !use_mrmr {
        grid = vec![kept.len()];
    }
    let max_k = *grid.iter().max().expect("non-empty grid");
    // Positions within `kept` in rank order.
    let ranking: Vec<usize> = if use_mrmr {
        record(None, "mrmr", &is_train);
        mrmr_select(&outer_train.x, &outer_train.labels, max_k, cfg.mrmr_form)
    } else {
        (0..kept.len()).collect()
    };
    let ranked_cols: Vec<usize> = ranking.iter().map(|&i| kept[i]).collect();

    // Inner folds over the outer-training patients, preprocessed once.
    let train_labels: Vec<u8> = train_ids.iter().map(|&p| patients[p].1).collect();
    let inner_split = stratified_folds(&train_labels, cfg.inner_k, derive_seed(fold_seed, 0));
    let mut inner = Vec::with_capacity(cfg.inner_k);
    for (j, members) in inner_split.iter().enumerate() {
        let mut in_val = vec![false; patients.len()];
        for &m in members {
            in_val[train_ids[m]] = true;
        }
        let in_fit: Vec<bool> = (0..patients.len()).map(|p| is_train[p] && !in_val[p]).collect();
        let fit_rows = rows_of(rows, &in_fit, patient_of);
        let val_rows = rows_of(rows, &in_val, patient_of);
        let (inner_kept, train, val) = prepare(&fit_rows, &val_rows, &ranked_cols);
        record(Some(j), "imputer", &in_fit);
        record(Some(j), "scaler", &in_fit);
        let kept_rank = ranked_cols.iter().map(|c| inner_kept.iter().position(|k| k == c)).collect();
        inner.push(InnerFold { kept_rank, train, val });
    }

    let dims = search_space(grid.len());
    let how = cfg.aggregation;
    let objective = |values: &[f64]| {
        let (hp, k) = decode(values, &grid);
        let mut aucs = Vec::new();
        for (j, f) in inner.iter().enumerate() {
            let cols = top_k(&f.kept_rank, k);
            if cols.is_empty() {
                continue;
            }
            let Ok(scores) = score_patients(&f.train, &f.val, &cols, &hp, derive_seed(fold_seed, 100 + j as u64), how) else {
                continue;
            };
            if let Some(a) = auc_of(&scores) {
                aucs.push(a);
            }
        }
        if aucs.is_empty() { 0.5 } else { aucs.iter().sum::<f64>() / aucs.len() as f64 }
    };
    let search = hyper_search(&dims, cfg.budget, derive_seed(fold_seed, 1), objective)?;
    for j in 0..inner.len() {
        let mut in_fit = is_train.clone();
        for &m in &inner_split[j] {
            in_fit[train_ids[m]] = false;
        }
        record(Some(j), "forest", &in_fit);
    }
    record(None, "search", &is_train);

    let (hp, k) = decode(&search.best.values, &grid);
    let cols: Vec<usize> = ranking[..k].to_vec();
    record(None, "forest", &is_train);
    let scores = score_patients(&outer_train, &outer_test, &cols, &hp, derive_seed(fold_seed, 2), how)?;
    let s: Vec<f64> = scores.iter().map(|t| t.2).collect();
    let l: Vec<u8> = scores.iter().map(|t| t.1).collect();
    let roc = roc_auc(&s, &l)?;

    report.selected_features = cols.iter().map(|&c| names[kept[c]].clone()).collect();
    report.hyperparams = Some(hp);
    report.inner_auc = Some(search.best.score);
    report.auc = Some(roc.auc);
    report.roc = roc.points;
    report.scores = scores
        .into_iter()
        .map(|(p, label, score)| PatientScore { patient_id: patients[p].0.clone(), label, score })
        .collect();
    Ok((report, trace))
}

pub fn nested_cv(table: &CohortTable, feature_set: FeatureSet, phase: Phase, cfg: &CvConfig) -> Result<CvReport, LearnError> {
    table.validate()?;
    if cfg.outer_k < 2 || cfg.inner_k < 2 {
        return Err(LearnError::InvalidConfig("fold counts must be at least 2".into()));
    }
    let patients = table.patients(phase);
    let required = 2 * cfg.outer_k;
    if patients.len() < required {
        return Err(LearnError::TooFewPatients { found: patients.len(), required });
    }
    let index: HashMap<&str, usize> = patients.iter().enumerate().map(|(i, (id, _))| (id.as_str(), i)).collect();
    let rows: Vec<&CohortRow> = table.rows.iter().filter(|r| r.phase == phase).collect();
    let patient_of: Vec<usize> = rows.iter().map(|r| index[r.patient_id.as_str()]).collect();
    let columns = feature_set.columns(&table.feature_names);
    if columns.is_empty() {
        return Err(LearnError::NoFeatures);
    }
    let use_mrmr = feature_set != FeatureSet::Meta;

    let labels: Vec<u8> = patients.iter().map(|p| p.1).collect();
    let outer = stratified_folds(&labels, cfg.outer_k, derive_seed(cfg.seed, 0));
    let results: Vec<Result<(FoldReport, Vec<FitEvent>), LearnError>> = outer
        .par_iter()
        .enumerate()
        .map(|(f, members)| {
            run_outer_fold(f, members, &patients, &rows, &patient_of, &columns, &table.feature_names, use_mrmr, cfg)
        })
        .collect();

    let mut folds = Vec::with_capacity(cfg.outer_k);
    let mut trace = Vec::new();
    for r in results {
        let (fold, events) = r?;
        folds.push(fold);
        trace.extend(events);
    }
    let aucs: Vec<f64> = folds.iter().filter_map(|f| f.auc).collect();
    if aucs.is_empty() {
        return Err(LearnError::AllFoldsDegenerate);
    }
    let pooled: Vec<&PatientScore> = folds.iter().flat_map(|f| &f.scores).collect();
    let pooled_auc = roc_auc(
        &pooled.iter().map(|s| s.score).collect::<Vec<_>>(),
        &pooled.iter().map(|s| s.label).collect::<Vec<_>>(),
    )
    .ok()
    .map(|r| r.auc);
    Ok(CvReport {
        phase,
        feature_set,
        config: cfg.clone(),
        n_patients: patients.len(),
        mean_auc: aucs.iter().sum::<f64>() / aucs.len() as f64,
        pooled_auc,
        folds,
        trace,
    })
}
