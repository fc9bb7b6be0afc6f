//! Patient-level ROC analysis and segment vote aggregation.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// `+∞` for the first point; stored as `null` in JSON.
    #[serde(serialize_with = "ser_threshold", deserialize_with = "de_threshold")]
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    pub auc: f64,
    /// From (0, 0) at threshold +∞ to (1, 1), one point per distinct score.
    pub points: Vec<RocPoint>,
}

fn ser_threshold<S: Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
    if t.is_finite() { s.serialize_some(t) } else { s.serialize_none() }
}

fn de_threshold<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// AUROC from the Mann–Whitney rank statistic (tied scores get midranks,
/// so each tied positive/negative pair counts ½), plus the ROC curve.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<Roc, LearnError> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(LearnError::OneClassOnly);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Doubled midranks keep everything integral.
    let mut rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let doubled_mid = (i + 1 + j + 1) as u64;
        let pos = order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        rank_sum2 += doubled_mid * pos;
        i = j + 1;
    }
    let u2 = rank_sum2 - (n_pos * (n_pos + 1)) as u64;
    let auc = u2 as f64 / (2 * n_pos * n_neg) as f64;

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = order.len();
    while k > 0 {
        let s = scores[order[k - 1]];
        while k > 0 && scores[order[k - 1]] == s {
            if labels[order[k - 1]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k -= 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    Ok(Roc { auc, points })
}

/// How segment probabilities become one patient score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Share of segments with probability > 0.5.
    #[default]
    VoteShare,
    MeanProbability,
}

/// Share of segments voting positive (probability strictly above 0.5).
pub fn vote(probabilities: &[f64]) -> f64 {
    if probabilities.is_empty() {
        return 0.0;
    }
    probabilities.iter().filter(|&&p| p > 0.5).count() as f64 / probabilities.len() as f64
}

pub fn aggregate(probabilities: &[f64], how: Aggregation) -> f64 {
    match how {
        Aggregation::VoteShare => vote(probabilities),
        Aggregation::MeanProbability if probabilities.is_empty() => 0.0,
        Aggregation::MeanProbability => probabilities.iter().sum::<f64>() / probabilities.len() as f64,
    }
}

/// Hard patient label from a score.
pub fn vote_label(score: f64) -> u8 {
    u8::from(score > 0.5)
}
