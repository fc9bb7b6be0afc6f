//! Small DSP toolkit: Butterworth biquads run forward-backward, centered
//! derivatives and moving averages.

use std::f64::consts::{PI, SQRT_2};

/// Second-order section in transposed direct form II, normalized so a0 = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn design(f0: f64, fs: f64, highpass: bool) -> Self {
        assert!(f0 > 0.0 && f0 < fs / 2.0, "corner {f0} Hz outside (0, fs/2) for fs={fs}");
        let w0 = 2.0 * PI * f0 / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / SQRT_2; // Q = 1/sqrt(2)
        let a0 = 1.0 + alpha;
        let b = if highpass {
            [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0]
        } else {
            [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0]
        };
        Biquad {
            b: [b[0] / a0, b[1] / a0, b[2] / a0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    pub fn lowpass(f0: f64, fs: f64) -> Self {
        Self::design(f0, fs, false)
    }

    pub fn highpass(f0: f64, fs: f64) -> Self {
        Self::design(f0, fs, true)
    }

    /// Filter in place, starting from the steady state for a constant input
    /// equal to the first sample.
    fn run(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let y0 = gain * x0;
        let mut z1 = y0 - b0 * x0;
        let mut z2 = b2 * x0 - a2 * y0;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z1;
            z1 = b1 * input - a1 * y + z2;
            z2 = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// A chain of biquads applied forward and then backward (zero phase).
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroPhase {
    sections: Vec<Biquad>,
    pad: usize,
}

impl ZeroPhase {
    pub fn new(sections: Vec<Biquad>, pad: usize) -> Self {
        Self { sections, pad }
    }

    /// Butterworth band-pass built from a high-pass and a low-pass section.
    /// Edges are padded with half a second of odd reflection.
    pub fn bandpass(lo: f64, hi: f64, fs: f64) -> Self {
        Self::new(
            vec![Biquad::highpass(lo, fs), Biquad::lowpass(hi, fs)],
            (0.5 * fs).round() as usize,
        )
    }

    pub fn lowpass(f0: f64, fs: f64) -> Self {
        Self::new(vec![Biquad::lowpass(f0, fs)], (0.5 * fs).round() as usize)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = self.pad.min(n - 1);
        let mut buf = Vec::with_capacity(n + 2 * pad);
        let (first, last) = (x[0], x[n - 1]);
        buf.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        buf.extend_from_slice(x);
        buf.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        for s in &self.sections {
            s.run(&mut buf);
        }
        buf.reverse();
        for s in &self.sections {
            s.run(&mut buf);
        }
        buf.reverse();
        buf.drain(..pad);
        buf.truncate(n);
        buf
    }
}

/// Centered first difference, in units per second.
pub fn derivative(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            (x[hi] - x[lo]) * fs / (hi - lo) as f64
        })
        .collect()
}

/// Five-point derivative of the QRS-detection literature, centered, units per second.
pub fn five_point_derivative(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    let at = |i: isize| x[i.clamp(0, n as isize - 1) as usize];
    (0..n as isize)
        .map(|i| (2.0 * at(i + 1) + at(i + 2) - at(i - 2) - 2.0 * at(i - 1)) * fs / 8.0)
        .collect()
}

/// Centered moving average with a window of `width` samples (made odd);
/// shrinks at the edges.
pub fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let half = width / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        prefix.push(acc);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Index of the largest `key(x[i])` in `lo..hi` (clamped to the slice); first wins on ties.
pub fn argmax_by<F: Fn(f64) -> f64>(x: &[f64], lo: usize, hi: usize, key: F) -> Option<usize> {
    let hi = hi.min(x.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in x.iter().enumerate().take(hi).skip(lo) {
        let k = key(v);
        if best.is_none_or(|(_, b)| k > b) {
            best = Some((i, k));
        }
    }
    best.map(|(i, _)| i)
}

pub fn ms_to_samples(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0).round() as usize
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Median of a non-empty slice (average of the two middle values for even lengths).
pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
