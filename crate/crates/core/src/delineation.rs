//! Per-beat fiducial points on a single lead.
//!
//! Works on the lead after 0.5–40 Hz zero-phase conditioning:
//!
//! * R is the largest absolute deflection within ±50 ms of the detector peak.
//! * QRS onset and J are the first 8 ms-long flat stretches (|slope| below 5 %
//!   of the beat's steepest slope within ±80 ms of R), walking outwards from
//!   the steepest up- and down-strokes. Q and S are the opposite-polarity
//!   extrema between onset, R and J.
//! * T peak is the largest deflection from baseline in
//!   `[J + 40 ms, min(J + 400 ms, R + 0.7 RR)]`; T offset is where the tangent
//!   at the steepest return slope crosses the baseline.
//! * P peak is the largest deflection in `[QRS on − 250 ms, QRS on − 50 ms]`
//!   (clipped to after the previous T). P on/off are where the slope falls
//!   to 20 % of the P wave's own steepest slope.
//!
//! Boundary beats (first and last) only get QRS fiducials.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{self, ms_to_samples, ZeroPhase};
use crate::qrs::PeakList;

#[derive(Debug, Error, PartialEq)]
pub enum DelineationError {
    #[error("delineation needs at least 2 beats, got {0}")]
    TooFewBeats(usize),
}

/// Fiducial sample indices for one beat. `r` is always present.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatFiducials {
    pub p_on: Option<usize>,
    pub p_peak: Option<usize>,
    pub p_off: Option<usize>,
    pub qrs_on: Option<usize>,
    pub q: Option<usize>,
    pub r: usize,
    pub s: Option<usize>,
    pub j: Option<usize>,
    /// T-wave onset, used for the ST segment.
    pub t_on: Option<usize>,
    pub t_peak: Option<usize>,
    pub t_off: Option<usize>,
}

impl BeatFiducials {
    /// The ten reported fiducials in physiological order.
    pub fn ordered(&self) -> [Option<usize>; 10] {
        [
            self.p_on,
            self.p_peak,
            self.p_off,
            self.qrs_on,
            self.q,
            Some(self.r),
            self.s,
            self.j,
            self.t_peak,
            self.t_off,
        ]
    }

    pub fn is_complete(&self) -> bool {
        self.ordered().iter().all(Option::is_some)
    }

    pub fn is_ordered(&self) -> bool {
        let present: Vec<usize> = self.ordered().iter().flatten().copied().collect();
        present.windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiducialSet {
    pub lead: String,
    pub fs: f64,
    pub beats: Vec<BeatFiducials>,
}

/// Band-limit a lead to 0.5–40 Hz; delineation and amplitude measurements
/// both use this signal.
pub fn condition(x: &[f64], fs: f64) -> Vec<f64> {
    ZeroPhase::bandpass(0.5, 40.0, fs).apply(x)
}

struct Ctx<'a> {
    sig: &'a [f64],
    slope: Vec<f64>,
    fs: f64,
}

impl Ctx<'_> {
    fn ms(&self, ms: f64) -> usize {
        ms_to_samples(ms, self.fs)
    }

    fn n(&self) -> usize {
        self.sig.len()
    }

    /// QRS onset, J, Q and S around `r`.
    fn qrs(&self, r: usize) -> (Option<usize>, Option<usize>, Option<usize>, Option<usize>) {
        let win = self.ms(80.0);
        let run = self.ms(8.0).max(1);
        let lo = r.saturating_sub(win);
        let hi = (r + win).min(self.n() - 1);
        let steepest = self.slope[lo..=hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if steepest <= 0.0 {
            return (None, None, None, None);
        }
        let thr = 0.05 * steepest;
        let flat = |a: usize, b: usize| b <= self.n() && self.slope[a..b].iter().all(|v| v.abs() < thr);

        let onset = dsp::argmax_by(&self.slope, lo, r + 1, f64::abs).and_then(|start| {
            (lo..=start)
                .rev()
                .find(|&k| k + 1 >= run && flat(k + 1 - run, k + 1))
        });
        let offset = dsp::argmax_by(&self.slope, r, hi + 1, f64::abs)
            .and_then(|start| (start..=hi).find(|&k| flat(k, k + run)));

        let polarity = self.sig[r].signum();
        let q = onset.and_then(|on| dsp::argmax_by(self.sig, on, r + 1, |v| -polarity * v));
        let s = offset.and_then(|j| dsp::argmax_by(self.sig, r, j + 1, |v| -polarity * v));
        (onset, offset, q, s)
    }

    /// T peak, onset and offset; `hi` is the exclusive end of the search window.
    fn t_wave(&self, r: usize, j: usize, hi: usize, base: f64) -> (Option<usize>, Option<usize>, Option<usize>) {
        let lo = j + self.ms(40.0);
        let hi = hi.min(self.n());
        if lo + 2 >= hi {
            return (None, None, None);
        }
        let Some(peak) = dsp::argmax_by(self.sig, lo, hi, |v| (v - base).abs()) else {
            return (None, None, None);
        };
        let amp = self.sig[peak] - base;
        if amp.abs() < 0.03 * (self.sig[r] - base).abs() || peak == lo || peak + 1 == hi {
            return (None, None, None);
        }
        let pol = amp.signum();

        // Tangent at the steepest return towards baseline.
        let Some(k) = dsp::argmax_by(&self.slope, peak, hi, |v| -pol * v) else {
            return (Some(peak), None, None);
        };
        let off = if -pol * self.slope[k] > 0.0 {
            let t = k as f64 + (base - self.sig[k]) * self.fs / self.slope[k];
            let limit = (hi + self.ms(50.0)) as f64;
            (t >= peak as f64 && t <= limit && t < self.n() as f64).then(|| t.round() as usize)
        } else {
            None
        };

        let up_max = self.slope[j..=peak].iter().fold(0.0f64, |m, v| m.max(pol * v));
        let on = (up_max > 0.0)
            .then(|| (j + 1..=peak).find(|&i| pol * self.slope[i] > 0.1 * up_max))
            .flatten();
        (Some(peak), on, off)
    }

    /// P peak, onset and offset in `[lo, hi)`.
    fn p_wave(&self, lo: usize, hi: usize, base: f64, r_amp: f64) -> Option<(usize, usize, usize)> {
        if lo + 2 >= hi {
            return None;
        }
        let peak = dsp::argmax_by(self.sig, lo, hi, |v| (v - base).abs())?;
        let amp = self.sig[peak] - base;
        if amp.abs() < 0.04 * r_amp.abs() || peak == lo || peak + 1 == hi {
            return None;
        }
        let pol = amp.signum();
        let reach = self.ms(60.0);
        let up = dsp::argmax_by(&self.slope, peak.saturating_sub(reach), peak + 1, |v| pol * v)?;
        let down = dsp::argmax_by(&self.slope, peak, (peak + reach + 1).min(self.n()), |v| -pol * v)?;
        let up_thr = 0.2 * pol * self.slope[up];
        let down_thr = 0.2 * -pol * self.slope[down];
        if up_thr <= 0.0 || down_thr <= 0.0 {
            return None;
        }
        let on = (up.saturating_sub(reach)..=up).rev().find(|&k| pol * self.slope[k] < up_thr)?;
        let off = (down..(down + reach).min(self.n())).find(|&k| -pol * self.slope[k] < down_thr)?;
        Some((on, peak, off))
    }
}

/// Isoelectric level: mean over the PR segment, or over the 40 ms before QRS
/// onset when there is no P wave.
pub fn baseline(sig: &[f64], fs: f64, p_off: Option<usize>, qrs_on: usize) -> f64 {
    let lo = match p_off {
        Some(p) if p < qrs_on => p,
        _ => qrs_on.saturating_sub(ms_to_samples(40.0, fs)),
    };
    if lo >= qrs_on {
        return sig[qrs_on];
    }
    dsp::mean(&sig[lo..qrs_on])
}

pub fn delineate(x: &[f64], peaks: &PeakList, fs: f64, lead: &str) -> Result<FiducialSet, DelineationError> {
    if peaks.len() < 2 {
        return Err(DelineationError::TooFewBeats(peaks.len()));
    }
    let sig = condition(x, fs);
    delineate_conditioned(&sig, peaks, fs, lead)
}

/// As [`delineate`], on an already conditioned lead.
pub fn delineate_conditioned(
    sig: &[f64],
    peaks: &PeakList,
    fs: f64,
    lead: &str,
) -> Result<FiducialSet, DelineationError> {
    if peaks.len() < 2 {
        return Err(DelineationError::TooFewBeats(peaks.len()));
    }
    let ctx = Ctx {
        sig,
        slope: dsp::derivative(sig, fs),
        fs,
    };
    let n = sig.len();
    let near = ctx.ms(50.0);

    // QRS complexes.
    let mut beats: Vec<BeatFiducials> = peaks
        .indices()
        .iter()
        .filter(|&&p| p < n)
        .map(|&p| {
            let r = dsp::argmax_by(sig, p.saturating_sub(near), p + near + 1, f64::abs).unwrap_or(p);
            let (qrs_on, j, q, s) = ctx.qrs(r);
            BeatFiducials {
                qrs_on,
                q,
                r,
                s,
                j,
                ..BeatFiducials::default()
            }
        })
        .collect();
    let count = beats.len();
    if count < 2 {
        return Err(DelineationError::TooFewBeats(count));
    }

    // T waves need the following R; P waves need the preceding T.
    let mut t_ends: Vec<Option<usize>> = vec![None; count];
    for i in 0..count - 1 {
        let (r, next_r) = (beats[i].r, beats[i + 1].r);
        let (Some(j), Some(on)) = (beats[i].j, beats[i].qrs_on) else { continue };
        let rr = next_r.saturating_sub(r);
        let hi = (j + ctx.ms(400.0)).min(r + (0.7 * rr as f64) as usize);
        let base = baseline(sig, fs, None, on);
        let (peak, t_on, t_off) = ctx.t_wave(r, j, hi, base);
        t_ends[i] = t_off.or(peak);
        if i > 0 {
            let b = &mut beats[i];
            if let (Some(pk), Some(off)) = (peak, t_off) {
                if j <= pk && pk <= off {
                    b.t_peak = peak;
                    b.t_off = t_off;
                    b.t_on = t_on.filter(|&t| j <= t && t <= pk);
                }
            } else if peak.is_some() {
                b.t_peak = peak;
                b.t_on = t_on.filter(|&t| peak.is_some_and(|pk| j <= t && t <= pk));
            }
        }
    }
    for i in 1..count - 1 {
        let Some(on) = beats[i].qrs_on else { continue };
        let prev_r = beats[i - 1].r;
        let rr = beats[i].r.saturating_sub(prev_r);
        let floor = match t_ends[i - 1] {
            Some(t) => t + ctx.ms(10.0),
            None => prev_r + (0.6 * rr as f64) as usize,
        };
        let lo = on.saturating_sub(ctx.ms(250.0)).max(floor);
        let hi = on.saturating_sub(ctx.ms(50.0));
        let base = sig[on];
        let r_amp = sig[beats[i].r] - base;
        if let Some((p_on, p_peak, p_off)) = ctx.p_wave(lo, hi, base, r_amp) {
            if p_on <= p_peak && p_peak <= p_off && p_off <= on && p_on >= floor.saturating_sub(ctx.ms(20.0)) {
                let b = &mut beats[i];
                b.p_on = Some(p_on);
                b.p_peak = Some(p_peak);
                b.p_off = Some(p_off);
            }
        }
    }

    debug_assert!(beats.iter().all(BeatFiducials::is_ordered));
    Ok(FiducialSet {
        lead: lead.to_string(),
        fs,
        beats,
    })
}

/// Debug dump: one row per beat, empty cells for missing fiducials.
pub fn write_fiducials_csv<W: Write>(set: &FiducialSet, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "lead", "beat", "p_on", "p_peak", "p_off", "qrs_on", "q", "r", "s", "j", "t_on", "t_peak", "t_off",
    ])?;
    let cell = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
    for (i, b) in set.beats.iter().enumerate() {
        w.write_record([
            set.lead.clone(),
            i.to_string(),
            cell(b.p_on),
            cell(b.p_peak),
            cell(b.p_off),
            cell(b.qrs_on),
            cell(b.q),
            b.r.to_string(),
            cell(b.s),
            cell(b.j),
            cell(b.t_on),
            cell(b.t_peak),
            cell(b.t_off),
        ])?;
    }
    w.flush()?;
    Ok(())
}
