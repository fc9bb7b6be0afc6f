//! Feature-level synthetic cohorts with a planted label signal.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::cv::{CohortRow, CohortTable};
use crate::quality::Phase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedCohort {
    pub n_patients: usize,
    pub n_positive: usize,
    /// ECG-like noise columns, named `f000`, `f001`, ...
    pub n_features: usize,
    pub segments: usize,
    /// Columns whose mean shifts by `effect_size` standard deviations in positives.
    pub informative: Vec<usize>,
    pub effect_size: f64,
    /// Between-patient share of the variance of every column.
    pub patient_variance: f64,
    pub missing_rate: f64,
    /// Append uninformative `age` and `sex` columns.
    pub meta: bool,
    pub seed: u64,
}

impl Default for PlantedCohort {
    fn default() -> Self {
        Self {
            n_patients: 43,
            n_positive: 15,
            n_features: 60,
            segments: 5,
            informative: vec![0],
            effect_size: 2.0,
            patient_variance: 0.5,
            missing_rate: 0.0,
            meta: true,
            seed: 0,
        }
    }
}

impl PlantedCohort {
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.n_features).map(|i| format!("f{i:03}")).collect();
        if self.meta {
            names.push("age".into());
            names.push("sex".into());
        }
        names
    }

    /// Rows for both phases; the post phase carries the same patient effects.
    pub fn generate(&self) -> CohortTable {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        let between = self.patient_variance.clamp(0.0, 1.0).sqrt();
        let within = (1.0 - self.patient_variance.clamp(0.0, 1.0)).sqrt();
        let mut labels: Vec<u8> = (0..self.n_patients).map(|i| u8::from(i < self.n_positive)).collect();
        labels.shuffle(&mut rng);

        let mut rows = Vec::new();
        for (p, &label) in labels.iter().enumerate() {
            let id = format!("P{p:03}");
            let effects: Vec<f64> = (0..self.n_features).map(|_| between * std_normal.sample(&mut rng)).collect();
            let age = rng.random_range(45.0..80.0_f64).round();
            let sex = f64::from(u8::from(rng.random_bool(0.5)));
            for phase in [Phase::Pre, Phase::Post] {
                for s in 0..self.segments {
                    let mut values: Vec<Option<f64>> = effects
                        .iter()
                        .enumerate()
                        .map(|(j, e)| {
                            let shift = if label == 1 && self.informative.contains(&j) { self.effect_size } else { 0.0 };
                            let v = e + within * std_normal.sample(&mut rng) + shift;
                            (rng.random::<f64>() >= self.missing_rate).then_some(v)
                        })
                        .collect();
                    if self.meta {
                        values.push(Some(age));
                        values.push(Some(sex));
                    }
                    rows.push(CohortRow { patient_id: id.clone(), phase, segment: s, label, values });
                }
            }
        }
        CohortTable { feature_names: self.feature_names(), rows }
    }
}

/// Copy of `table` with patient labels permuted across patients.
pub fn permute_labels(table: &CohortTable, seed: u64) -> CohortTable {
    let mut ids: Vec<(String, u8)> = Vec::new();
    for r in &table.rows {
        if !ids.iter().any(|(id, _)| *id == r.patient_id) {
            ids.push((r.patient_id.clone(), r.label));
        }
    }
    let mut labels: Vec<u8> = ids.iter().map(|t| t.1).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = table.clone();
    for r in &mut out.rows {
        let i = ids.iter().position(|(id, _)| *id == r.patient_id).expect("known patient");
        r.label = labels[i];
    }
    out
}
