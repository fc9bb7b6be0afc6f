//! Deterministic sum-of-Gaussians 12-lead ECG with exact ground truth.
//!
//! Every beat is five Gaussian waves (P, Q, R, S, T) placed relative to the R
//! peak. The T wave's offset and width scale with `sqrt(RR / 1 s)` so that
//! the QT interval shortens with heart rate and T never runs into the next P.
//!
//! Ground-truth fiducial conventions, for a wave centered at `c` with width σ:
//!
//! * P on/off, QRS on (from Q) and J (from S) sit at `c ∓ 2.4477 σ`, where
//!   the wave has decayed to 5 % of its peak;
//! * T offset sits at `c + 2 σ`, where the tangent at the steepest descending
//!   point crosses the baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::recordio::{Recording, Sex, N_LEADS};

/// Half-width, in σ, at which a Gaussian has decayed to 5 % of its peak.
pub const EDGE_SIGMAS: f64 = 2.447_746_830_680_816;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis parameters: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amp_uv: f64,
    pub width_ms: f64,
    pub offset_ms: f64,
}

impl Wave {
    pub const fn new(amp_uv: f64, width_ms: f64, offset_ms: f64) -> Self {
        Self {
            amp_uv,
            width_ms,
            offset_ms,
        }
    }

    fn scaled(self, gain: f64) -> Self {
        Self {
            amp_uv: self.amp_uv * gain,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatTemplate {
    pub p: Wave,
    pub q: Wave,
    pub r: Wave,
    pub s: Wave,
    pub t: Wave,
}

impl Default for BeatTemplate {
    /// QT = 400 ms, QRS ≈ 93 ms and PR ≈ 154 ms at RR = 1 s.
    fn default() -> Self {
        Self {
            p: Wave::new(150.0, 20.0, -150.0),
            q: Wave::new(-120.0, 7.0, -28.0),
            r: Wave::new(1200.0, 10.0, 0.0),
            s: Wave::new(-250.0, 8.0, 28.0),
            t: Wave::new(300.0, 45.0, 265.0),
        }
    }
}

impl BeatTemplate {
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            p: self.p.scaled(gain),
            q: self.q.scaled(gain),
            r: self.r.scaled(gain),
            s: self.s.scaled(gain),
            t: self.t.scaled(gain),
        }
    }

    pub fn without_p(mut self) -> Self {
        self.p.amp_uv = 0.0;
        self
    }

    /// The five waves with T adapted to the given RR interval.
    fn waves(&self, rr_ms: f64) -> [Wave; 5] {
        let k = (rr_ms / 1000.0).sqrt();
        let t = Wave::new(self.t.amp_uv, self.t.width_ms * k, self.t.offset_ms * k);
        [self.p, self.q, self.r, self.s, t]
    }

    /// Ground-truth fiducial times (ms relative to R) at the given RR interval.
    pub fn fiducials_ms(&self, rr_ms: f64) -> FiducialTimes {
        let [p, q, r, s, t] = self.waves(rr_ms);
        let has_p = p.amp_uv != 0.0;
        let onset = if q.amp_uv != 0.0 {
            q.offset_ms - EDGE_SIGMAS * q.width_ms
        } else {
            r.offset_ms - EDGE_SIGMAS * r.width_ms
        };
        let offset = if s.amp_uv != 0.0 {
            s.offset_ms + EDGE_SIGMAS * s.width_ms
        } else {
            r.offset_ms + EDGE_SIGMAS * r.width_ms
        };
        FiducialTimes {
            p_on: has_p.then_some(p.offset_ms - EDGE_SIGMAS * p.width_ms),
            p_peak: has_p.then_some(p.offset_ms),
            p_off: has_p.then_some(p.offset_ms + EDGE_SIGMAS * p.width_ms),
            qrs_on: onset,
            q: q.offset_ms,
            r: r.offset_ms,
            s: s.offset_ms,
            j: offset,
            t_peak: t.offset_ms,
            t_off: t.offset_ms + 2.0 * t.width_ms,
        }
    }

    fn value_at(&self, waves: &[Wave; 5], t_ms: f64) -> f64 {
        waves
            .iter()
            .map(|w| w.amp_uv * (-0.5 * ((t_ms - w.offset_ms) / w.width_ms).powi(2)).exp())
            .sum()
    }
}

/// Fiducial times in ms relative to the R peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiducialTimes {
    pub p_on: Option<f64>,
    pub p_peak: Option<f64>,
    pub p_off: Option<f64>,
    pub qrs_on: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub j: f64,
    pub t_peak: f64,
    pub t_off: f64,
}

/// Default per-lead gains applied to the base template.
pub const DEFAULT_LEAD_GAINS: [f64; 12] = [
    1.0, 1.2, 0.45, -0.85, 0.55, 0.8, 0.6, 0.9, 1.1, 1.3, 1.15, 0.95,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub patient_id: String,
    pub hr_bpm: f64,
    /// When set, heart rate ramps linearly from `hr_bpm` (at 40 % of the
    /// recording) to this value (at 60 %).
    pub hr_end_bpm: Option<f64>,
    pub hrv_std_ms: f64,
    /// One template per lead, in standard lead order.
    pub templates: Vec<BeatTemplate>,
    pub noise_uv: f64,
    pub wander_uv: f64,
    pub wander_hz: f64,
    pub duration_s: f64,
    pub fs: f64,
    pub quant: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let base = BeatTemplate::default();
        Self {
            patient_id: "synth".into(),
            hr_bpm: 60.0,
            hr_end_bpm: None,
            hrv_std_ms: 0.0,
            templates: DEFAULT_LEAD_GAINS.iter().map(|&g| base.scaled(g)).collect(),
            noise_uv: 0.0,
            wander_uv: 0.0,
            wander_hz: 0.3,
            duration_s: 60.0,
            fs: 2000.0,
            quant: 0.03,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        for hr in std::iter::once(self.hr_bpm).chain(self.hr_end_bpm) {
            if !(30.0..=220.0).contains(&hr) {
                return bad(format!("heart rate {hr} bpm outside [30, 220]"));
            }
        }
        if self.fs < 250.0 {
            return bad(format!("fs {} < 250 Hz", self.fs));
        }
        if self.templates.len() != N_LEADS {
            return bad(format!("{} lead templates, expected 12", self.templates.len()));
        }
        let widths_ok = self.templates.iter().all(|t| {
            [t.p, t.q, t.r, t.s, t.t]
                .iter()
                .all(|w| w.width_ms > 0.0 && w.width_ms.is_finite())
        });
        if !widths_ok {
            return bad("wave widths must be positive".into());
        }
        if !(self.duration_s > 0.0 && self.quant > 0.0 && self.noise_uv >= 0.0 && self.hrv_std_ms >= 0.0) {
            return bad("duration, quantization, noise and HRV must be non-negative".into());
        }
        Ok(())
    }

    fn hr_at(&self, t_s: f64) -> f64 {
        match self.hr_end_bpm {
            None => self.hr_bpm,
            Some(end) => {
                let frac = ((t_s / self.duration_s - 0.4) / 0.2).clamp(0.0, 1.0);
                self.hr_bpm + frac * (end - self.hr_bpm)
            }
        }
    }
}

/// Ground truth for one beat. Sample indices are rounded from exact times
/// and are `None` when they fall outside the recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatTruth {
    pub r_time_s: f64,
    pub r: usize,
    pub rr_ms: Option<f64>,
    pub p_on: Option<usize>,
    pub p_peak: Option<usize>,
    pub p_off: Option<usize>,
    pub qrs_on: Option<usize>,
    pub q: Option<usize>,
    pub s: Option<usize>,
    pub j: Option<usize>,
    pub t_peak: Option<usize>,
    pub t_off: Option<usize>,
    pub pr_int_ms: Option<f64>,
    pub qrs_int_ms: f64,
    pub qt_int_ms: f64,
    /// R amplitude above the PR-segment baseline, per lead.
    pub rwave_uv: [f64; 12],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub fs: f64,
    pub beats: Vec<BeatTruth>,
}

impl GroundTruth {
    pub fn r_peaks(&self) -> Vec<usize> {
        self.beats.iter().map(|b| b.r).collect()
    }

    /// Beats whose R lies in `[start, end)` samples, re-indexed to `start`.
    pub fn r_peaks_in(&self, start: usize, end: usize) -> Vec<usize> {
        self.beats
            .iter()
            .filter(|b| b.r >= start && b.r < end)
            .map(|b| b.r - start)
            .collect()
    }
}

pub fn generate(spec: &SynthSpec) -> Result<(Recording, GroundTruth), SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = (spec.duration_s * spec.fs).round() as usize;
    let fs = spec.fs;

    // Beat times.
    let first_rr = 60.0 / spec.hr_at(0.0);
    let mut times = vec![0.25 + rng.random::<f64>() * 0.5 * first_rr];
    let jitter = Normal::new(0.0, spec.hrv_std_ms.max(0.0)).expect("finite std");
    loop {
        let last = *times.last().unwrap();
        let rr_ms = (60_000.0 / spec.hr_at(last) + jitter.sample(&mut rng)).clamp(300.0, 2000.0);
        let next = last + rr_ms / 1000.0;
        if next >= spec.duration_s {
            break;
        }
        times.push(next);
    }

    let mut samples = vec![vec![0.0; n]; N_LEADS];
    let mut beats = Vec::with_capacity(times.len());
    let to_index = |t_s: f64| {
        let i = (t_s * fs).round();
        (i >= 0.0 && (i as usize) < n).then_some(i as usize)
    };
    for (bi, &r_time) in times.iter().enumerate() {
        // T adapts to the preceding interval; the first beat uses the nominal rate.
        let prev_rr_ms = if bi == 0 {
            60_000.0 / spec.hr_at(r_time)
        } else {
            (r_time - times[bi - 1]) * 1000.0
        };
        let mut rwave_uv = [0.0; 12];
        for (lead, tpl) in spec.templates.iter().enumerate() {
            let waves = tpl.waves(prev_rr_ms);
            for w in &waves {
                if w.amp_uv == 0.0 {
                    continue;
                }
                let center = r_time + w.offset_ms / 1000.0;
                let sigma = w.width_ms / 1000.0;
                let lo = ((center - 5.0 * sigma) * fs).floor().max(0.0) as usize;
                let hi = (((center + 5.0 * sigma) * fs).ceil().max(0.0) as usize).min(n);
                for (i, v) in samples[lead].iter_mut().enumerate().take(hi).skip(lo) {
                    let z = (i as f64 / fs - center) / sigma;
                    *v += w.amp_uv * (-0.5 * z * z).exp();
                }
            }
            let f = tpl.fiducials_ms(prev_rr_ms);
            let (b_lo, b_hi) = match f.p_off {
                Some(p_off) => (p_off, f.qrs_on),
                None => (f.qrs_on - 40.0, f.qrs_on),
            };
            let baseline = (0..=20)
                .map(|k| tpl.value_at(&waves, b_lo + (b_hi - b_lo) * k as f64 / 20.0))
                .sum::<f64>()
                / 21.0;
            rwave_uv[lead] = tpl.value_at(&waves, f.r) - baseline;
        }
        let f = spec.templates[0].fiducials_ms(prev_rr_ms);
        let at = |ms: f64| to_index(r_time + ms / 1000.0);
        beats.push(BeatTruth {
            r_time_s: r_time,
            r: to_index(r_time).expect("beats lie inside the recording"),
            rr_ms: times.get(bi + 1).map(|next| (next - r_time) * 1000.0),
            p_on: f.p_on.and_then(at),
            p_peak: f.p_peak.and_then(at),
            p_off: f.p_off.and_then(at),
            qrs_on: at(f.qrs_on),
            q: at(f.q),
            s: at(f.s),
            j: at(f.j),
            t_peak: at(f.t_peak),
            t_off: at(f.t_off),
            pr_int_ms: f.p_on.map(|p_on| f.qrs_on - p_on),
            qrs_int_ms: f.j - f.qrs_on,
            qt_int_ms: f.t_off - f.qrs_on,
            rwave_uv,
        });
    }

    // Additive noise and baseline wander, then amplitude quantization.
    let noise = Normal::new(0.0, spec.noise_uv).expect("finite noise");
    let phase = rng.random::<f64>() * std::f64::consts::TAU;
    for lead in samples.iter_mut() {
        for (i, v) in lead.iter_mut().enumerate() {
            if spec.wander_uv > 0.0 {
                let t = i as f64 / fs;
                *v += spec.wander_uv * (std::f64::consts::TAU * spec.wander_hz * t + phase).sin();
            }
            if spec.noise_uv > 0.0 {
                *v += noise.sample(&mut rng);
            }
            *v = (*v / spec.quant).round() * spec.quant;
        }
    }

    let rec = Recording::new(spec.patient_id.clone(), samples, fs, spec.quant)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    Ok((rec, GroundTruth { fs, beats }))
}

/// Add white Gaussian noise to every lead of `rec`, each lead at `noise_uv[lead]` σ.
pub fn add_white_noise(rec: &Recording, noise_uv: &[f64; 12], seed: u64) -> Recording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = rec
        .samples()
        .iter()
        .zip(noise_uv)
        .map(|(lead, &sd)| {
            let d = Normal::new(0.0, sd).expect("finite noise");
            lead.iter()
                .map(|v| ((v + d.sample(&mut rng)) / rec.quant()).round() * rec.quant())
                .collect()
        })
        .collect();
    Recording::new(rec.patient_id(), samples, rec.fs(), rec.quant()).expect("same shape")
}

/// One synthetic patient of a cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPatient {
    pub spec: SynthSpec,
    pub afr_label: u8,
    pub age: f64,
    pub sex: Sex,
}

/// Parameters for drawing a synthetic cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortParams {
    pub n_patients: usize,
    pub duration_s: f64,
    pub fs: f64,
    pub hr_range: (f64, f64),
    /// Heart-rate change from the first to the last part of each recording.
    pub post_hr_shift_bpm: f64,
    pub hrv_std_ms: f64,
    pub noise_uv: f64,
    pub seed: u64,
}

impl Default for CohortParams {
    fn default() -> Self {
        Self {
            n_patients: 20,
            duration_s: 600.0,
            fs: 2000.0,
            hr_range: (55.0, 85.0),
            post_hr_shift_bpm: 0.0,
            hrv_std_ms: 20.0,
            noise_uv: 5.0,
            seed: 0,
        }
    }
}

pub fn cohort(params: &CohortParams) -> Vec<SynthPatient> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let base = BeatTemplate::default();
    let age_dist: Normal<f64> = Normal::new(63.5, 10.9).expect("valid");
    (0..params.n_patients)
        .map(|i| {
            let hr: f64 = rng.random_range(params.hr_range.0..=params.hr_range.1);
            let templates = DEFAULT_LEAD_GAINS
                .iter()
                .map(|&g| base.scaled(g * rng.random_range(0.8..1.2)))
                .collect();
            let spec = SynthSpec {
                patient_id: format!("P{i:03}"),
                hr_bpm: hr,
                hr_end_bpm: (params.post_hr_shift_bpm != 0.0).then_some(hr + params.post_hr_shift_bpm),
                hrv_std_ms: params.hrv_std_ms,
                templates,
                noise_uv: params.noise_uv,
                duration_s: params.duration_s,
                fs: params.fs,
                seed: rng.random(),
                ..SynthSpec::default()
            };
            SynthPatient {
                spec,
                afr_label: rng.random_bool(0.5) as u8,
                age: f64::round(age_dist.sample(&mut rng).clamp(18.0, 95.0)),
                sex: if rng.random_bool(0.6) { Sex::M } else { Sex::F },
            }
        })
        .collect()
}
