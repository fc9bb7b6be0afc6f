//! Paired pre/post comparison of features: Student t-test, mean fold change
//! and the volcano table.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 3 complete pairs, got {0}")]
    TooFewPairs(usize),
    #[error("every pair has a zero pre value")]
    AllPairsDegenerate,
    #[error("pre and post have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

// ---------------------------------------------------------------------------
// Student t distribution

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function (Lanczos, g = 7), for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let series = LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability P(|T| ≥ |t|) for Student t with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    inc_beta(0.5 * df, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// Paired tests

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub n: usize,
    /// The differences had zero variance.
    pub degenerate: bool,
}

fn complete_pairs(pre: &[Option<f64>], post: &[Option<f64>]) -> Result<Vec<(f64, f64)>, StatsError> {
    if pre.len() != post.len() {
        return Err(StatsError::LengthMismatch(pre.len(), post.len()));
    }
    Ok(pre
        .iter()
        .zip(post)
        .filter_map(|(a, b)| a.zip(*b))
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .collect())
}

/// Paired Student t-test on `post − pre`; pairs with a missing side are dropped.
pub fn paired_ttest(pre: &[Option<f64>], post: &[Option<f64>]) -> Result<TTest, StatsError> {
    let pairs = complete_pairs(pre, post)?;
    let n = pairs.len();
    if n < 3 {
        return Err(StatsError::TooFewPairs(n));
    }
    let d: Vec<f64> = pairs.iter().map(|(a, b)| b - a).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    // Differences equal up to rounding count as degenerate.
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sd <= 1e-12 * scale || sd == 0.0 {
        let zero = mean.abs() <= 1e-12 * scale || mean == 0.0;
        return Ok(TTest {
            t: if zero { 0.0 } else { mean.signum() * f64::INFINITY },
            p: if zero { 1.0 } else { 0.0 },
            n,
            degenerate: true,
        });
    }
    let t = mean / (sd / nf.sqrt());
    Ok(TTest {
        t,
        p: t_two_sided_p(t, nf - 1.0),
        n,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldChange {
    pub mean_fc: f64,
    /// Pairs skipped because the pre value was zero.
    pub dropped_zero_pre: usize,
    /// Per-patient ratios do not all share one sign.
    pub sign_varies: bool,
}

/// Mean over patients of `post / pre`.
pub fn mean_fold_change(pre: &[Option<f64>], post: &[Option<f64>]) -> Result<FoldChange, StatsError> {
    let pairs = complete_pairs(pre, post)?;
    let ratios: Vec<f64> = pairs.iter().filter(|(a, _)| *a != 0.0).map(|(a, b)| b / a).collect();
    if ratios.is_empty() {
        return Err(StatsError::AllPairsDegenerate);
    }
    let positive = ratios.iter().filter(|r| **r > 0.0).count();
    let negative = ratios.iter().filter(|r| **r < 0.0).count();
    Ok(FoldChange {
        mean_fc: ratios.iter().sum::<f64>() / ratios.len() as f64,
        dropped_zero_pre: pairs.len() - ratios.len(),
        sign_varies: positive > 0 && negative > 0,
    })
}

/// Benjamini–Hochberg adjusted p-values, in input order.
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut q = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(p[i] * m as f64 / (rank + 1) as f64);
        q[i] = running.max(p[i]).min(1.0);
    }
    q
}

// ---------------------------------------------------------------------------
// Volcano table

/// How the fold-change criterion is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FcMode {
    /// `|mean_fc| > threshold`.
    #[default]
    Raw,
    /// `|log2 mean_fc| >= threshold`.
    Log2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VolcanoConfig {
    pub p_threshold: f64,
    pub fc_threshold: f64,
    pub fc_mode: FcMode,
}

impl Default for VolcanoConfig {
    fn default() -> Self {
        Self {
            p_threshold: 0.05,
            fc_threshold: 1.0,
            fc_mode: FcMode::Raw,
        }
    }
}

impl VolcanoConfig {
    /// The significance predicate applied to every row.
    pub fn is_significant(&self, p: Option<f64>, mean_fc: Option<f64>) -> bool {
        let (Some(p), Some(fc)) = (p, mean_fc) else { return false };
        let fc_ok = match self.fc_mode {
            FcMode::Raw => fc.abs() > self.fc_threshold,
            FcMode::Log2 => log2_fc(fc).is_some_and(|l| l.abs() >= self.fc_threshold),
        };
        p < self.p_threshold && fc_ok
    }
}

/// `log2 |fc|`, undefined at zero.
pub fn log2_fc(fc: f64) -> Option<f64> {
    (fc != 0.0 && fc.is_finite()).then(|| fc.abs().log2())
}

/// Pre and post values of the same features for the same patients.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedFeatureTable {
    pub patients: Vec<String>,
    pub features: Vec<String>,
    /// Row-major, one row per patient.
    pub pre: Vec<Vec<Option<f64>>>,
    pub post: Vec<Vec<Option<f64>>>,
}

impl PairedFeatureTable {
    /// Keep patients present in both phases, in the order of `pre`, and the
    /// features of the first pre row.
    pub fn align(pre: &[(String, FeatureVector)], post: &[(String, FeatureVector)]) -> Self {
        let features: Vec<String> = pre.first().map(|(_, f)| f.keys().cloned().collect()).unwrap_or_default();
        let mut table = PairedFeatureTable {
            patients: Vec::new(),
            features,
            pre: Vec::new(),
            post: Vec::new(),
        };
        for (id, a) in pre {
            let Some((_, b)) = post.iter().find(|(p, _)| p == id) else { continue };
            let row = |f: &FeatureVector| table.features.iter().map(|k| f.get(k).copied().flatten()).collect();
            let (ra, rb) = (row(a), row(b));
            table.patients.push(id.clone());
            table.pre.push(ra);
            table.post.push(rb);
        }
        table
    }

    pub fn n(&self) -> usize {
        self.patients.len()
    }

    pub fn column(&self, j: usize) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
        (
            self.pre.iter().map(|r| r[j]).collect(),
            self.post.iter().map(|r| r[j]).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolcanoRow {
    pub feature: String,
    pub n: usize,
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    pub mean_fc: Option<f64>,
    pub log2_fc: Option<f64>,
    pub significant: bool,
    /// Benjamini–Hochberg q-value; supplementary, does not affect `significant`.
    pub q_bh: Option<f64>,
    pub fc_sign_varies: bool,
    pub dropped_zero_pre: usize,
}

/// One row per feature sorted by ascending p (rows without a p last).
pub fn volcano(table: &PairedFeatureTable, cfg: &VolcanoConfig) -> Vec<VolcanoRow> {
    let mut rows: Vec<VolcanoRow> = (0..table.features.len())
        .into_par_iter()
        .map(|j| {
            let (pre, post) = table.column(j);
            let test = paired_ttest(&pre, &post).ok();
            let fc = mean_fold_change(&pre, &post).ok();
            let mean_fc = fc.map(|f| f.mean_fc);
            let p_value = test.map(|t| t.p);
            VolcanoRow {
                feature: table.features[j].clone(),
                n: test.map_or(0, |t| t.n),
                t: test.map(|t| t.t),
                p_value,
                mean_fc,
                log2_fc: mean_fc.and_then(log2_fc),
                significant: cfg.is_significant(p_value, mean_fc),
                q_bh: None,
                fc_sign_varies: fc.is_some_and(|f| f.sign_varies),
                dropped_zero_pre: fc.map_or(0, |f| f.dropped_zero_pre),
            }
        })
        .collect();

    let tested: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].p_value.is_some()).collect();
    let p: Vec<f64> = tested.iter().map(|&i| rows[i].p_value.unwrap_or(1.0)).collect();
    for (&i, q) in tested.iter().zip(benjamini_hochberg(&p)) {
        rows[i].q_bh = Some(q);
    }
    rows.sort_by(|a, b| match (a.p_value, b.p_value) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    rows
}

pub const VOLCANO_COLUMNS: [&str; 10] = [
    "feature",
    "p_value",
    "mean_fc",
    "log2_fc",
    "significant",
    "q_bh",
    "t",
    "n",
    "fc_sign_varies",
    "dropped_zero_pre",
];

pub fn write_volcano_csv<W: Write>(rows: &[VolcanoRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(VOLCANO_COLUMNS)?;
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.feature.clone(),
            cell(r.p_value),
            cell(r.mean_fc),
            cell(r.log2_fc),
            r.significant.to_string(),
            cell(r.q_bh),
            cell(r.t),
            r.n.to_string(),
            r.fc_sign_varies.to_string(),
            r.dropped_zero_pre.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    /// Two-sided p by Simpson integration of the t density over [|t|, ∞),
    /// after the substitution u = 1/(1+x) that maps the tail onto (0, 1].
    fn simpson_p(t: f64, df: f64) -> f64 {
        let c = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / (df * std::f64::consts::PI).sqrt();
        let pdf = |x: f64| c * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
        let upper = 1.0 / (1.0 + t.abs());
        // Limit at u = 0 is c·df^((df+1)/2)·u^(df−1).
        let g0 = if df == 1.0 { c } else { 0.0 };
        let g = |u: f64| if u <= 0.0 { g0 } else { pdf(1.0 / u - 1.0) / (u * u) };
        let n = 200_000;
        let h = upper / n as f64;
        let mut s = g(0.0) + g(upper);
        for i in 1..n {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        2.0 * s * h / 3.0
    }

    #[test]
    fn textbook_paired_example() {
        let r = paired_ttest(&some(&[1.0, 2.0, 3.0, 4.0]), &some(&[2.0, 4.0, 3.0, 6.0])).unwrap();
        assert_relative_eq!(r.t, 2.611, epsilon = 5e-4);
        // 0.07960 to four significant figures (cross-checked against statrs below).
        assert_relative_eq!(r.p, 0.079605, epsilon = 1e-6);
        assert!(!r.degenerate);
    }

    #[test]
    fn identical_phases_are_degenerate() {
        let v = some(&[1.0, 5.0, 2.0]);
        let r = paired_ttest(&v, &v).unwrap();
        assert_eq!((r.t, r.p, r.degenerate), (0.0, 1.0, true));
        let shifted = some(&[2.0, 6.0, 3.0]);
        let r = paired_ttest(&v, &shifted).unwrap();
        assert_eq!((r.p, r.degenerate), (0.0, true));
    }

    #[test]
    fn two_pairs_are_too_few() {
        assert_eq!(paired_ttest(&some(&[1.0, 2.0]), &some(&[2.0, 3.0])), Err(StatsError::TooFewPairs(2)));
        let pre = vec![Some(1.0), None, Some(2.0), Some(4.0)];
        let post = vec![Some(1.5), Some(2.0), None, Some(4.5)];
        assert_eq!(paired_ttest(&pre, &post), Err(StatsError::TooFewPairs(2)));
    }

    #[test]
    fn t_tail_matches_quadrature() {
        for &(t, df) in &[(0.3, 2.0), (2.611, 3.0), (1.0, 1.0), (4.2, 7.0), (0.05, 30.0), (3.3, 12.0)] {
            let p = t_two_sided_p(t, df);
            assert_relative_eq!(p, simpson_p(t, df), epsilon = 1e-9);
        }
        // Cauchy closed form at df = 1.
        assert_relative_eq!(t_two_sided_p(1.0, 1.0), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn t_tail_matches_statrs() {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        for df in [2.0, 3.0, 5.0, 9.0, 19.0, 42.0] {
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            for t in [0.0, 0.4, 1.1, 2.0, 3.7, 8.0] {
                let want = 2.0 * (1.0 - dist.cdf(t));
                assert!((t_two_sided_p(t, df) - want).abs() < 1e-10, "t={t} df={df}");
            }
        }
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_relative_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_relative_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-12);
    }

    #[test]
    fn fold_change_examples() {
        assert_eq!(mean_fold_change(&some(&[2.0, 2.0]), &some(&[4.0, 8.0])).unwrap().mean_fc, 3.0);
        assert_eq!(mean_fold_change(&some(&[2.0, 7.0]), &some(&[2.0, 7.0])).unwrap().mean_fc, 1.0);
        let fc = mean_fold_change(&some(&[1.0, 0.0, 2.0]), &some(&[2.0, 5.0, 2.0])).unwrap();
        assert_eq!((fc.mean_fc, fc.dropped_zero_pre), (1.5, 1));
        assert_eq!(mean_fold_change(&some(&[0.0, 0.0]), &some(&[1.0, 2.0])), Err(StatsError::AllPairsDegenerate));
        let fc = mean_fold_change(&some(&[1.0, -1.0]), &some(&[2.0, 2.0])).unwrap();
        assert!(fc.sign_varies);
    }

    #[test]
    fn bh_adjustment() {
        let q = benjamini_hochberg(&[0.01, 0.04, 0.03, 0.5]);
        assert_relative_eq!(q[0], 0.04);
        assert_relative_eq!(q[1], 0.04 * 4.0 / 3.0);
        assert_relative_eq!(q[2], 0.04 * 4.0 / 3.0);
        assert_relative_eq!(q[3], 0.5);
    }

    fn table(pre: Vec<Vec<f64>>, post: Vec<Vec<f64>>) -> PairedFeatureTable {
        let nf = pre[0].len();
        PairedFeatureTable {
            patients: (0..pre.len()).map(|i| format!("p{i}")).collect(),
            features: (0..nf).map(|j| format!("f{j}")).collect(),
            pre: pre.into_iter().map(|r| some(&r)).collect(),
            post: post.into_iter().map(|r| some(&r)).collect(),
        }
    }

    #[test]
    fn constant_feature_is_not_significant() {
        let t = table(vec![vec![3.0]; 6], vec![vec![3.0]; 6]);
        let rows = volcano(&t, &VolcanoConfig::default());
        assert_eq!(rows[0].p_value, Some(1.0));
        assert_eq!(rows[0].mean_fc, Some(1.0));
        assert!(!rows[0].significant);
    }

    #[test]
    fn pure_noise_is_suppressed_by_log2_threshold() {
        use rand::{Rng, SeedableRng};
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let (n, nf) = (30, 804);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| (0..nf).map(|_| 100.0 + 10.0 * rng.sample::<f64, _>(StandardNormal)).collect())
                .collect()
        };
        let t = table(draw(&mut rng), draw(&mut rng));
        let cfg = VolcanoConfig { fc_mode: FcMode::Log2, ..VolcanoConfig::default() };
        let rows = volcano(&t, &cfg);
        let small_p = rows.iter().filter(|r| r.p_value.unwrap() < 0.05).count() as f64 / nf as f64;
        assert!((0.02..0.09).contains(&small_p), "{small_p}");
        assert_eq!(rows.iter().filter(|r| r.significant).count(), 0);
        assert!(rows.windows(2).all(|w| w[0].p_value <= w[1].p_value));
    }

    #[test]
    fn csv_has_header_and_one_row_per_feature() {
        let t = table(vec![vec![1.0, 2.0]; 4], vec![vec![1.0, 2.5]; 4]);
        let rows = volcano(&t, &VolcanoConfig::default());
        let mut buf = Vec::new();
        write_volcano_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("feature,p_value,mean_fc,log2_fc,significant"));
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn swapping_phases_negates_t(pre in prop::collection::vec(-50.0f64..50.0, 3..15), seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let post: Vec<f64> = pre.iter().map(|v| v + rng.random_range(-5.0..7.0)).collect();
            let a = paired_ttest(&some(&pre), &some(&post)).unwrap();
            let b = paired_ttest(&some(&post), &some(&pre)).unwrap();
            prop_assert!((a.t + b.t).abs() < 1e-9 * (1.0 + a.t.abs()));
            prop_assert!((a.p - b.p).abs() < 1e-12);
        }

        #[test]
        fn scaling_leaves_significance_unchanged(
            pre in prop::collection::vec(1.0f64..50.0, 3..15),
            k in 0.01f64..100.0,
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let post: Vec<f64> = pre.iter().map(|v| v * rng.random_range(0.5..2.0)).collect();
            let scale = |v: &[f64]| some(&v.iter().map(|x| x * k).collect::<Vec<_>>());
            let a = paired_ttest(&some(&pre), &some(&post)).unwrap();
            let b = paired_ttest(&scale(&pre), &scale(&post)).unwrap();
            prop_assert!((a.t - b.t).abs() < 1e-8 * (1.0 + a.t.abs()));
            prop_assert!((a.p - b.p).abs() < 1e-10);
            let fa = mean_fold_change(&some(&pre), &some(&post)).unwrap().mean_fc;
            let fb = mean_fold_change(&scale(&pre), &scale(&post)).unwrap().mean_fc;
            prop_assert!((fa - fb).abs() < 1e-10 * fa.abs());
        }

        #[test]
        fn flags_follow_predicate(
            pre in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 3..10),
            shift in -3.0f64..3.0,
            log2 in any::<bool>(),
        ) {
            let post: Vec<Vec<f64>> = pre.iter().map(|r| r.iter().map(|v| v * 1.5 + shift).collect()).collect();
            let cfg = VolcanoConfig { fc_mode: if log2 { FcMode::Log2 } else { FcMode::Raw }, ..VolcanoConfig::default() };
            for r in volcano(&table(pre, post), &cfg) {
                let fc_ok = match cfg.fc_mode {
                    FcMode::Raw => r.mean_fc.is_some_and(|f| f.abs() > 1.0),
                    FcMode::Log2 => r.log2_fc.is_some_and(|l| l.abs() >= 1.0),
                };
                prop_assert_eq!(r.significant, r.p_value.is_some_and(|p| p < 0.05) && fc_ok);
            }
        }
    }
}
