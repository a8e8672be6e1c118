//! Speech-like test signals: syllables of glottal-pulse harmonics shaped by
//! gliding formant resonances, interleaved with noise bursts and short
//! pauses. Good enough to exercise spectrogram inversion and STOI without a
//! real corpus.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::Result;
use crate::seeding::rng_for;
use crate::transforms::Signal;

const PEAK: f64 = 0.5;

fn formant_gain(f: f64, formants: &[(f64, f64)]) -> f64 {
    let mut g = 0.02;
    for &(centre, bandwidth) in formants {
        let d = (f - centre) / bandwidth;
        g += (-d * d).exp();
    }
    g
}

fn envelope(i: usize, n: usize) -> f64 {
    let ramp = (n / 5).max(1);
    if i < ramp {
        0.5 - 0.5 * (std::f64::consts::PI * i as f64 / ramp as f64).cos()
    } else if i + ramp >= n {
        let j = n - i;
        0.5 - 0.5 * (std::f64::consts::PI * j as f64 / ramp as f64).cos()
    } else {
        1.0
    }
}

fn voiced<R: Rng>(rng: &mut R, out: &mut [f64], sample_rate: f64) {
    let n = out.len();
    let f0_start = rng.random_range(90.0..220.0);
    let f0_end = f0_start * rng.random_range(0.8..1.25);
    let start: [(f64, f64); 3] = [
        (rng.random_range(300.0..900.0), 90.0),
        (rng.random_range(900.0..2300.0), 130.0),
        (rng.random_range(2300.0..3200.0), 180.0),
    ];
    let end: Vec<(f64, f64)> = start
        .iter()
        .map(|&(c, b)| (c * rng.random_range(0.85..1.15), b))
        .collect();
    let ceiling = (0.45 * sample_rate).min(4500.0);
    let mut phase = 0.0;
    let mut formants = [(0.0, 0.0); 3];
    for (i, o) in out.iter_mut().enumerate() {
        let a = i as f64 / n as f64;
        let f0 = f0_start + (f0_end - f0_start) * a;
        for (k, f) in formants.iter_mut().enumerate() {
            *f = (start[k].0 + (end[k].0 - start[k].0) * a, start[k].1);
        }
        phase += TAU * f0 / sample_rate;
        let mut v = 0.0;
        let mut h = 1;
        while h as f64 * f0 < ceiling {
            let f = h as f64 * f0;
            v += formant_gain(f, &formants) / h as f64 * (h as f64 * phase).sin();
            h += 1;
        }
        *o += v * envelope(i, n);
    }
}

fn unvoiced<R: Rng>(rng: &mut R, out: &mut [f64]) {
    let n = out.len();
    let gain = rng.random_range(0.15..0.4);
    let mut prev = 0.0;
    for (i, o) in out.iter_mut().enumerate() {
        let w: f64 = rng.random_range(-1.0..1.0);
        // first difference: crude high-pass for a fricative-like tilt
        let v = w - 0.85 * prev;
        prev = w;
        *o += gain * v * envelope(i, n);
    }
}

/// A speech-like clip of `seconds` duration, deterministic in `(seed, label)`.
pub fn speech_like(seed: u64, label: &str, sample_rate: u32, seconds: f64) -> Result<Signal> {
    let mut rng = rng_for(seed, label);
    let fs = sample_rate as f64;
    let total = (seconds * fs).round().max(1.0) as usize;
    let mut samples = vec![0.0; total];
    let mut pos = (rng.random_range(0.0..0.05) * fs) as usize;
    while pos < total {
        let len = ((rng.random_range(0.12..0.3) * fs) as usize).min(total - pos);
        let kind: f64 = rng.random_range(0.0..1.0);
        let seg = &mut samples[pos..pos + len];
        if kind < 0.72 {
            voiced(&mut rng, seg, fs);
        } else if kind < 0.92 {
            unvoiced(&mut rng, seg);
        }
        pos += len + (rng.random_range(0.0..0.06) * fs) as usize;
    }
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for v in &mut samples {
            *v *= PEAK / peak;
        }
    } else {
        samples[0] = 1e-3;
    }
    Signal::new(samples, sample_rate)
}
