//! Windowed-sinc sample-rate conversion. Only applied when asked for.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::transforms::Signal;

/// Zero crossings of the sinc kernel kept on each side.
const HALF_TAPS: f64 = 16.0;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn blackman(t: f64) -> f64 {
    // t in [-1, 1]
    0.42 + 0.5 * (PI * t).cos() + 0.08 * (2.0 * PI * t).cos()
}

/// Resamples `x` from `from` Hz to `to` Hz. The output has
/// `round(len · to / from)` samples.
pub fn resample(x: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    if from == 0 || to == 0 {
        return Err(Error::InvalidArgument(
            "sample rates must be positive".into(),
        ));
    }
    if from == to {
        return Ok(x.to_vec());
    }
    let ratio = to as f64 / from as f64;
    let cutoff = ratio.min(1.0);
    let reach = HALF_TAPS / cutoff;
    let n_out = (x.len() as f64 * ratio).round() as usize;
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out {
        let t = n as f64 / ratio;
        let lo = (t - reach).ceil().max(0.0) as usize;
        let hi = ((t + reach).floor() as usize).min(x.len().saturating_sub(1));
        let mut acc = 0.0;
        for (k, &xk) in x.iter().enumerate().take(hi + 1).skip(lo) {
            let d = t - k as f64;
            acc += xk * cutoff * sinc(cutoff * d) * blackman(d / reach);
        }
        out.push(acc);
    }
    Ok(out)
}

pub fn resample_signal(s: &Signal, to: u32) -> Result<Signal> {
    Signal::new(resample(&s.samples, s.sample_rate, to)?, to)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, fs: u32, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * f * i as f64 / fs as f64).sin())
            .collect()
    }

    #[test]
    fn identity_rate() {
        let x = tone(100.0, 8000, 50);
        assert_eq!(resample(&x, 8000, 8000).unwrap(), x);
    }

    #[test]
    fn tone_survives_down_and_up() {
        for (from, to) in [(16000, 10000), (10000, 16000), (22050, 10000)] {
            let x = tone(440.0, from, from as usize / 2);
            let y = resample(&x, from, to).unwrap();
            assert_eq!(y.len(), to as usize / 2);
            let expected = tone(440.0, to, y.len());
            // ignore edge effects
            let skip = 64;
            let err = y[skip..y.len() - skip]
                .iter()
                .zip(&expected[skip..])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-3, "{from}->{to}: {err}");
        }
    }

    #[test]
    fn removes_content_above_new_nyquist() {
        let x = tone(7000.0, 16000, 8000);
        let y = resample(&x, 16000, 10000).unwrap();
        let rms = (y[100..y.len() - 100].iter().map(|v| v * v).sum::<f64>()
            / (y.len() - 200) as f64)
            .sqrt();
        assert!(rms < 1e-2, "{rms}");
    }
}
