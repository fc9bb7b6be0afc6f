//! Two algorithmically independent R-peak detectors and beat matching.
//!
//! [`detect_energy`] follows the Pan–Tompkins recipe: 5–15 Hz band-pass,
//! five-point derivative, squaring, 150 ms moving-window integration, and
//! dual adaptive thresholds with T-wave rejection and search-back.
//!
//! [`detect_filterbank`] is a single-stage detector on the smoothed energy of
//! a 10–25 Hz band, thresholded against the median of recent beat energies,
//! with its own search-back rule.
//!
//! Both report each beat at the absolute maximum of their own band-passed
//! signal within ±100 ms of the detection, with a 250 ms refractory period.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{self, ms_to_samples, ZeroPhase};

pub const REFRACTORY_MS: f64 = 250.0;
pub const LOCATE_MS: f64 = 100.0;
pub const MIN_SIGNAL_S: f64 = 2.0;
pub const MIN_FS: f64 = 250.0;

#[derive(Debug, Error, PartialEq)]
pub enum QrsError {
    #[error("signal of {duration_s:.3} s is shorter than {MIN_SIGNAL_S} s")]
    SignalTooShort { duration_s: f64 },
    #[error("sampling rate {fs} Hz is below {MIN_FS} Hz")]
    RateTooLow { fs: f64 },
}

/// Strictly increasing R-peak sample indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakList {
    indices: Vec<usize>,
    fs: f64,
}

impl PeakList {
    /// Sorts and deduplicates `indices`.
    pub fn new(mut indices: Vec<usize>, fs: f64) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices, fs }
    }

    pub fn empty(fs: f64) -> Self {
        Self::new(Vec::new(), fs)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Peaks in `[start, end)`, re-indexed relative to `start`.
    pub fn slice(&self, start: usize, end: usize) -> PeakList {
        let lo = self.indices.partition_point(|&i| i < start);
        let hi = self.indices.partition_point(|&i| i < end);
        PeakList {
            indices: self.indices[lo..hi].iter().map(|i| i - start).collect(),
            fs: self.fs,
        }
    }
}

fn check_input(x: &[f64], fs: f64) -> Result<(), QrsError> {
    if fs < MIN_FS {
        return Err(QrsError::RateTooLow { fs });
    }
    let duration_s = x.len() as f64 / fs;
    if duration_s < MIN_SIGNAL_S {
        return Err(QrsError::SignalTooShort { duration_s });
    }
    Ok(())
}

/// Move each detection to the largest |bp| within ±100 ms, then drop
/// detections closer than the refractory period to a larger neighbour.
fn locate(bp: &[f64], detections: &[usize], fs: f64) -> Vec<usize> {
    let half = ms_to_samples(LOCATE_MS, fs);
    let refractory = ms_to_samples(REFRACTORY_MS, fs);
    let mut out: Vec<usize> = Vec::with_capacity(detections.len());
    for &d in detections {
        let Some(r) = dsp::argmax_by(bp, d.saturating_sub(half), d + half + 1, f64::abs) else {
            continue;
        };
        match out.last() {
            Some(&prev) if r <= prev || r - prev < refractory => {
                if bp[r].abs() > bp[prev].abs() {
                    out.pop();
                    // The replacement must still respect the earlier beat.
                    if out.last().is_none_or(|&p| r > p && r - p >= refractory) {
                        out.push(r);
                    } else {
                        out.push(prev);
                    }
                }
            }
            _ => out.push(r),
        }
    }
    out
}

/// Sliding-window maximum over ±`half` samples.
fn window_max(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        let hi = (i + half + 1).min(n);
        while next < hi {
            while dq.back().is_some_and(|&b| x[b] <= x[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f + half < i) {
            dq.pop_front();
        }
        *slot = x[*dq.front().expect("window is non-empty")];
    }
    out
}

struct Candidate {
    pos: usize,
    value: f64,
    slope: f64,
}

/// Pan–Tompkins-style detector (band-pass 5–15 Hz, integrated squared slope).
pub fn detect_energy(x: &[f64], fs: f64) -> Result<PeakList, QrsError> {
    check_input(x, fs)?;
    let bp = ZeroPhase::bandpass(5.0, 15.0, fs).apply(x);
    let slope = dsp::five_point_derivative(&bp, fs);
    let squared: Vec<f64> = slope.iter().map(|d| d * d).collect();
    let mwi = dsp::moving_average(&squared, ms_to_samples(150.0, fs));

    let learn = ((2.0 * fs) as usize).min(mwi.len());
    let learn_max = mwi[..learn].iter().cloned().fold(0.0, f64::max);
    if learn_max <= 0.0 && mwi.iter().all(|&v| v <= 0.0) {
        return Ok(PeakList::empty(fs));
    }

    // Candidate peaks: maxima of the integrated signal within ±200 ms.
    let spacing = ms_to_samples(200.0, fs);
    let local = window_max(&mwi, spacing);
    let slope_half = ms_to_samples(75.0, fs);
    let mut candidates = Vec::new();
    let mut i = 0;
    while i < mwi.len() {
        if mwi[i] > 0.0 && mwi[i] == local[i] {
            let lo = i.saturating_sub(slope_half);
            let hi = (i + slope_half + 1).min(slope.len());
            let s = slope[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            candidates.push(Candidate { pos: i, value: mwi[i], slope: s });
            i += spacing.max(1);
        } else {
            i += 1;
        }
    }

    let refractory = ms_to_samples(REFRACTORY_MS, fs);
    let t_wave_window = ms_to_samples(360.0, fs);
    let mut spki = 0.25 * learn_max;
    let mut npki = 0.5 * dsp::mean(&mwi[..learn]);
    let mut accepted: Vec<Candidate> = Vec::new();
    let mut rejected: Vec<Candidate> = Vec::new();
    let mut rr: VecDeque<usize> = VecDeque::with_capacity(8);

    let threshold = |spki: f64, npki: f64| npki + 0.25 * (spki - npki);

    fn push_rr(rr: &mut VecDeque<usize>, accepted: &[Candidate]) {
        if let [.., a, b] = accepted {
            if rr.len() == 8 {
                rr.pop_front();
            }
            rr.push_back(b.pos - a.pos);
        }
    }

    let search_back = |until: usize,
                       accepted: &mut Vec<Candidate>,
                       rejected: &mut Vec<Candidate>,
                       rr: &mut VecDeque<usize>,
                       spki: &mut f64,
                       npki: f64| {
        let Some(last) = accepted.last().map(|c| c.pos) else { return };
        if rr.is_empty() {
            return;
        }
        let rr_avg = rr.iter().sum::<usize>() as f64 / rr.len() as f64;
        if ((until - last) as f64) <= 1.66 * rr_avg {
            return;
        }
        let thr2 = 0.5 * threshold(*spki, npki);
        let best = rejected
            .iter()
            .enumerate()
            .filter(|(_, c)| c.pos > last + refractory && c.pos + refractory <= until && c.value > thr2)
            .max_by(|a, b| a.1.value.total_cmp(&b.1.value))
            .map(|(k, _)| k);
        if let Some(k) = best {
            let c = rejected.swap_remove(k);
            *spki = 0.25 * c.value + 0.75 * *spki;
            accepted.push(c);
            push_rr(rr, accepted);
        }
    };

    for c in candidates {
        search_back(c.pos, &mut accepted, &mut rejected, &mut rr, &mut spki, npki);
        let thr1 = threshold(spki, npki);
        if let Some(last) = accepted.last() {
            if c.pos - last.pos < refractory {
                if c.value > last.value {
                    accepted.pop();
                    accepted.push(c);
                }
                continue;
            }
            if c.value > thr1 && c.pos - last.pos < t_wave_window && c.slope < 0.5 * last.slope {
                npki = 0.125 * c.value + 0.875 * npki;
                rejected.push(c);
                continue;
            }
        }
        if c.value > thr1 {
            spki = 0.125 * c.value + 0.875 * spki;
            accepted.push(c);
            push_rr(&mut rr, &accepted);
        } else {
            npki = 0.125 * c.value + 0.875 * npki;
            rejected.push(c);
        }
    }
    search_back(mwi.len(), &mut accepted, &mut rejected, &mut rr, &mut spki, npki);
    accepted.sort_by_key(|c| c.pos);

    let detections: Vec<usize> = accepted.iter().map(|c| c.pos).collect();
    Ok(PeakList::new(locate(&bp, &detections, fs), fs))
}

/// Energy detector on a 10–25 Hz band with a median-of-recent-beats threshold.
pub fn detect_filterbank(x: &[f64], fs: f64) -> Result<PeakList, QrsError> {
    check_input(x, fs)?;
    let bp = ZeroPhase::bandpass(10.0, 25.0, fs).apply(x);
    let squared: Vec<f64> = bp.iter().map(|v| v * v).collect();
    let energy = dsp::moving_average(&squared, ms_to_samples(40.0, fs));
    let n = energy.len();

    // Initial beat energy: median of the per-second maxima of the first 4 s.
    let second = fs as usize;
    let maxima: Vec<f64> = energy[..(4 * second).min(n)]
        .chunks(second)
        .map(|c| c.iter().cloned().fold(0.0, f64::max))
        .collect();
    let init = dsp::median(&maxima);
    if init <= 0.0 {
        return Ok(PeakList::empty(fs));
    }

    let refractory = ms_to_samples(REFRACTORY_MS, fs);
    let peak_span = ms_to_samples(120.0, fs);
    let mut recent: VecDeque<f64> = VecDeque::from(vec![init; 5]);
    let mut intervals: VecDeque<usize> = VecDeque::with_capacity(5);
    let mut beats: Vec<usize> = Vec::new();

    let threshold = |recent: &VecDeque<f64>| {
        let v: Vec<f64> = recent.iter().copied().collect();
        0.25 * dsp::median(&v)
    };
    let accept = |pos: usize, beats: &mut Vec<usize>, recent: &mut VecDeque<f64>, intervals: &mut VecDeque<usize>| {
        if let Some(&last) = beats.last() {
            if intervals.len() == 5 {
                intervals.pop_front();
            }
            intervals.push_back(pos - last);
        }
        recent.pop_front();
        recent.push_back(energy[pos]);
        beats.push(pos);
    };

    let mut i = 0;
    while i < n {
        // Search-back over a long gap since the last beat.
        if let (Some(&last), false) = (beats.last(), intervals.is_empty()) {
            let mut sorted: Vec<usize> = intervals.iter().copied().collect();
            sorted.sort_unstable();
            let typical = sorted[sorted.len() / 2];
            if (i - last) as f64 > 1.5 * typical as f64 && i > last + 2 * refractory {
                let lo = last + refractory;
                let hi = i - refractory;
                if let Some(k) = dsp::argmax_by(&energy, lo, hi, |v| v) {
                    if energy[k] > 0.5 * threshold(&recent) {
                        accept(k, &mut beats, &mut recent, &mut intervals);
                        i = k + refractory;
                        continue;
                    }
                }
            }
        }
        if energy[i] > threshold(&recent) {
            let pos = dsp::argmax_by(&energy, i, i + peak_span, |v| v).expect("non-empty span");
            match beats.last() {
                Some(&last) if pos < last + refractory => {}
                _ => accept(pos, &mut beats, &mut recent, &mut intervals),
            }
            i = pos + refractory;
        } else {
            i += 1;
        }
    }
    Ok(PeakList::new(locate(&bp, &beats, fs), fs))
}

/// Matching summary between two peak lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub n_match: usize,
    pub n_a: usize,
    pub n_b: usize,
}

/// Greedy one-to-one nearest matching; the resulting pairs as (a index, b index).
pub fn matched_pairs(a: &PeakList, b: &PeakList, tol_ms: f64) -> Vec<(usize, usize)> {
    let tol = tol_ms * a.fs / 1000.0;
    let (ai, bi) = (a.indices(), b.indices());
    let mut pairs: Vec<(f64, usize, usize, usize)> = Vec::new();
    let mut lo = 0;
    for (ia, &pa) in ai.iter().enumerate() {
        while lo < bi.len() && (bi[lo] as f64) < pa as f64 - tol {
            lo += 1;
        }
        for (ib, &pb) in bi.iter().enumerate().skip(lo) {
            let d = (pb as f64 - pa as f64).abs();
            if pb as f64 > pa as f64 + tol {
                break;
            }
            if d <= tol {
                pairs.push((d, ia, ib, pa + pb));
            }
        }
    }
    // Symmetric ordering key (distance, midpoint) keeps n_match independent of argument order.
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.3.cmp(&y.3)).then(ai[x.1].cmp(&ai[y.1])));
    let mut used_a = vec![false; ai.len()];
    let mut used_b = vec![false; bi.len()];
    let mut out = Vec::new();
    for (_, ia, ib, _) in pairs {
        if !used_a[ia] && !used_b[ib] {
            used_a[ia] = true;
            used_b[ib] = true;
            out.push((ia, ib));
        }
    }
    out.sort_unstable();
    out
}

pub fn match_peaks(a: &PeakList, b: &PeakList, tol_ms: f64) -> MatchCounts {
    MatchCounts {
        n_match: matched_pairs(a, b, tol_ms).len(),
        n_a: a.len(),
        n_b: b.len(),
    }
}
