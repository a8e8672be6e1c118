//! Short-time objective intelligibility.
//!
//! The standard algorithm: resample to 10 kHz, drop frames more than 40 dB
//! below the loudest reference frame, decompose into 15 third-octave bands,
//! and average the correlations of clipped, normalized 384 ms band
//! envelopes.

use rustfft::FftPlanner;

use super::resample::resample;
use crate::error::{Error, Result};
use crate::transforms::{Complex, Signal};

pub const STOI_RATE: u32 = 10_000;
const FRAME: usize = 256;
const HOP: usize = FRAME / 2;
const NFFT: usize = 512;
const BANDS: usize = 15;
const MIN_FREQ: f64 = 150.0;
/// Frames per intermediate-intelligibility segment (384 ms).
const SEGMENT: usize = 30;
const BETA_DB: f64 = -15.0;
const DYNAMIC_RANGE_DB: f64 = 40.0;
const EPS: f64 = f64::EPSILON;

/// `numpy.hanning(n + 2)[1:-1]`.
fn hann(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n + 1) as f64).cos())
        .collect()
}

/// Band membership over the `NFFT/2 + 1` bins, as `(first, end)` ranges.
fn third_octave_bands() -> Vec<(usize, usize)> {
    let bins = NFFT / 2 + 1;
    let freqs: Vec<f64> = (0..bins)
        .map(|i| i as f64 * STOI_RATE as f64 / NFFT as f64)
        .collect();
    let nearest = |target: f64| {
        let mut best = 0;
        for (i, f) in freqs.iter().enumerate() {
            if (f - target).powi(2) < (freqs[best] - target).powi(2) {
                best = i;
            }
        }
        best
    };
    (0..BANDS)
        .map(|k| {
            let k = k as f64;
            let lo = MIN_FREQ * 2f64.powf((2.0 * k - 1.0) / 6.0);
            let hi = MIN_FREQ * 2f64.powf((2.0 * k + 1.0) / 6.0);
            (nearest(lo), nearest(hi))
        })
        .collect()
}

fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    // frames at 0, HOP, ... strictly before len - FRAME
    (0..len.saturating_sub(FRAME)).step_by(HOP)
}

fn remove_silent_frames(x: &[f64], y: &[f64], window: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let energy = |s: &[f64], start: usize| {
        let e: f64 = s[start..start + FRAME]
            .iter()
            .zip(window)
            .map(|(v, w)| (v * w).powi(2))
            .sum();
        20.0 * (e.sqrt() + EPS).log10()
    };
    let energies: Vec<f64> = starts.iter().map(|&s| energy(x, s)).collect();
    let top = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energies)
        .filter(|(_, e)| top - DYNAMIC_RANGE_DB - **e < 0.0)
        .map(|(s, _)| *s)
        .collect();
    let out_len = if kept.is_empty() {
        0
    } else {
        (kept.len() - 1) * HOP + FRAME
    };
    let mut xs = vec![0.0; out_len];
    let mut ys = vec![0.0; out_len];
    for (j, &s) in kept.iter().enumerate() {
        let o = j * HOP;
        for i in 0..FRAME {
            xs[o + i] += x[s + i] * window[i];
            ys[o + i] += y[s + i] * window[i];
        }
    }
    (xs, ys)
}

/// Third-octave band envelopes, `[band][frame]`.
fn band_envelopes(x: &[f64], window: &[f64], bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let fft = FftPlanner::new().plan_fft_forward(NFFT);
    let mut buf = vec![Complex::default(); NFFT];
    let mut out = vec![Vec::new(); BANDS];
    for start in frame_starts(x.len()) {
        buf.iter_mut().for_each(|c| *c = Complex::default());
        for i in 0..FRAME {
            buf[i] = Complex::new(x[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (b, &(lo, hi)) in bands.iter().enumerate() {
            let power: f64 = buf[lo..hi].iter().map(|c| c.norm_sqr()).sum();
            out[b].push(power.sqrt());
        }
    }
    out
}

fn normalize(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|a| *a -= mean);
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt() + EPS;
    v.iter_mut().for_each(|a| *a /= n);
}

/// STOI of `estimate` against `reference`. Both must share length and rate.
pub fn stoi(reference: &Signal, estimate: &Signal) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::Stoi(format!(
            "reference has {} samples, estimate {}",
            reference.len(),
            estimate.len()
        )));
    }
    if reference.sample_rate != estimate.sample_rate {
        return Err(Error::Stoi("sample rates differ".into()));
    }
    if reference.samples.iter().all(|v| *v == 0.0) {
        return Err(Error::Stoi("reference is silent".into()));
    }
    let x = resample(&reference.samples, reference.sample_rate, STOI_RATE)?;
    let y = resample(&estimate.samples, estimate.sample_rate, STOI_RATE)?;
    let window = hann(FRAME);
    let (x, y) = remove_silent_frames(&x, &y, &window);
    let bands = third_octave_bands();
    let xb = band_envelopes(&x, &window, &bands);
    let yb = band_envelopes(&y, &window, &bands);
    let frames = xb[0].len();
    if frames < SEGMENT {
        return Err(Error::Stoi(format!(
            "{frames} non-silent frames, need at least {SEGMENT} (384 ms)"
        )));
    }
    let clip = 1.0 + 10f64.powf(-BETA_DB / 20.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for m in SEGMENT..=frames {
        for b in 0..BANDS {
            let xs = &xb[b][m - SEGMENT..m];
            let ys = &yb[b][m - SEGMENT..m];
            let nx = xs.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = ys.iter().map(|v| v * v).sum::<f64>().sqrt();
            let alpha = nx / (ny + EPS);
            let mut yp: Vec<f64> = ys
                .iter()
                .zip(xs)
                .map(|(yv, xv)| (yv * alpha).min(xv * clip))
                .collect();
            let mut xn = xs.to_vec();
            normalize(&mut yp);
            normalize(&mut xn);
            total += yp.iter().zip(&xn).map(|(a, b)| a * b).sum::<f64>();
            count += 1;
        }
    }
    Ok(total / count as f64)
}
