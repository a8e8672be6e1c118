//! The measurement operator: a unitary-normalized STFT with a self-dual sine
//! window at 50% overlap, its adjoint, and magnitude measurements.
//!
//! Signals are zero-padded by half a window on both ends before framing, so
//! every nominal sample is covered by exactly two frames whose squared
//! windows sum to one. Together with the unitary DFT this makes the frame
//! tight: `adjoint(forward(x)) == x` and `‖forward(x)‖ == ‖x‖`.
//!
//! Coefficients are stored frame-major: frame `m` occupies
//! `coeffs[m * window_length..(m + 1) * window_length]`, one full complex DFT
//! (no half-spectrum folding).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// A real, finite, nonempty sampled signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSignal("empty signal".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "non-finite sample at index {i}"
            )));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidSignal("sample rate must be positive".into()));
        }
        Ok(Signal {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.samples)
    }
}

/// Framing parameters. The hop is always half the window length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftConfig {
    pub window_length: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_length: 1024,
        }
    }
}

impl StftConfig {
    pub fn new(window_length: usize) -> Result<Self> {
        let cfg = StftConfig { window_length };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_length < 2 || !self.window_length.is_multiple_of(2) {
            return Err(Error::InvalidWindow(self.window_length));
        }
        Ok(())
    }

    pub fn hop(&self) -> usize {
        self.window_length / 2
    }

    /// Number of frames for a signal of `signal_length` samples.
    pub fn frame_count(&self, signal_length: usize) -> usize {
        signal_length.div_ceil(self.hop()) + 1
    }
}

/// Complex STFT coefficients of a real signal, frame-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub coeffs: Vec<Complex>,
    pub config: StftConfig,
    pub signal_length: usize,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.config.frame_count(self.signal_length)
    }

    pub fn n_bins(&self) -> usize {
        self.config.window_length
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex {
        self.coeffs[frame * self.config.window_length + bin]
    }

    pub fn magnitudes(&self) -> Measurements {
        Measurements {
            r: self.coeffs.iter().map(|c| c.norm()).collect(),
        }
    }
}

/// Nonnegative magnitude measurements, in the flattened spectrogram layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurements {
    pub r: Vec<f64>,
}

impl Measurements {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if let Some(v) = r.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "measurement {v} is not a finite nonnegative value"
            )));
        }
        Ok(Measurements { r })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.r)
    }
}

/// `w[n] = sin(π (n + 0.5) / length)`.
pub fn make_sine_window(length: usize) -> Result<Vec<f64>> {
    StftConfig::new(length)?;
    Ok((0..length)
        .map(|n| (PI * (n as f64 + 0.5) / length as f64).sin())
        .collect())
}

/// A planned STFT operator for a fixed signal length.
///
/// Construct once and reuse in iterative solvers; the free functions
/// [`stft`], [`istft`] and [`measure`] plan on every call.
#[derive(Clone)]
pub struct StftOperator {
    config: StftConfig,
    signal_length: usize,
    n_frames: usize,
    window: Vec<f64>,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StftOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftOperator")
            .field("config", &self.config)
            .field("signal_length", &self.signal_length)
            .field("n_frames", &self.n_frames)
            .finish()
    }
}

impl StftOperator {
    pub fn new(config: StftConfig, signal_length: usize) -> Result<Self> {
        config.validate()?;
        if signal_length == 0 {
            return Err(Error::InvalidSignal("empty signal".into()));
        }
        let n = config.window_length;
        let mut planner = FftPlanner::new();
        Ok(StftOperator {
            config,
            signal_length,
            n_frames: config.frame_count(signal_length),
            window: make_sine_window(n)?,
            scale: 1.0 / (n as f64).sqrt(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn config(&self) -> StftConfig {
        self.config
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    /// Length of the flattened coefficient vector.
    pub fn coeff_len(&self) -> usize {
        self.n_frames * self.config.window_length
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Applies the operator into `out` (length [`Self::coeff_len`]).
    pub fn forward_into(&self, x: &[f64], out: &mut [Complex]) -> Result<()> {
        self.check(x.len(), self.signal_length, "stft input")?;
        self.check(out.len(), self.coeff_len(), "stft output")?;
        let n = self.config.window_length;
        let hop = self.config.hop() as isize;
        let len = self.signal_length as isize;
        let mut scratch = vec![Complex::default(); self.forward.get_inplace_scratch_len()];
        for (m, frame) in out.chunks_exact_mut(n).enumerate() {
            let start = m as isize * hop - hop;
            for (j, c) in frame.iter_mut().enumerate() {
                let idx = start + j as isize;
                let v = if (0..len).contains(&idx) {
                    x[idx as usize] * self.window[j]
                } else {
                    0.0
                };
                *c = Complex::new(v, 0.0);
            }
            self.forward.process_with_scratch(frame, &mut scratch);
            for c in frame.iter_mut() {
                *c *= self.scale;
            }
        }
        Ok(())
    }

    /// Applies the adjoint (windowed overlap-add of inverse unitary DFTs,
    /// real part) into `out` (length [`Self::signal_length`]).
    pub fn adjoint_into(&self, coeffs: &[Complex], out: &mut [f64]) -> Result<()> {
        self.check(coeffs.len(), self.coeff_len(), "istft input")?;
        self.check(out.len(), self.signal_length, "istft output")?;
        let n = self.config.window_length;
        let hop = self.config.hop() as isize;
        let len = self.signal_length as isize;
        out.fill(0.0);
        let mut buf = vec![Complex::default(); n];
        let mut scratch = vec![Complex::default(); self.inverse.get_inplace_scratch_len()];
        for (m, frame) in coeffs.chunks_exact(n).enumerate() {
            buf.copy_from_slice(frame);
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = m as isize * hop - hop;
            let lo = (-start).max(0) as usize;
            let hi = ((len - start).min(n as isize)).max(0) as usize;
            for j in lo..hi {
                out[(start + j as isize) as usize] += self.window[j] * buf[j].re * self.scale;
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<Complex>> {
        let mut out = vec![Complex::default(); self.coeff_len()];
        self.forward_into(x, &mut out)?;
        Ok(out)
    }

    pub fn adjoint(&self, coeffs: &[Complex]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.signal_length];
        self.adjoint_into(coeffs, &mut out)?;
        Ok(out)
    }

    fn check(&self, actual: usize, expected: usize, context: &'static str) -> Result<()> {
        if actual != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual,
                context,
            });
        }
        Ok(())
    }
}

pub fn stft(signal: &Signal, cfg: StftConfig) -> Result<Spectrogram> {
    let op = StftOperator::new(cfg, signal.len())?;
    Ok(Spectrogram {
        coeffs: op.forward(&signal.samples)?,
        config: cfg,
        signal_length: signal.len(),
    })
}

/// Adjoint of [`stft`]; also its inverse since the frame is tight.
/// The sample rate of the result is unknown to a spectrogram and must be
/// supplied.
pub fn istft(spec: &Spectrogram, sample_rate: u32) -> Result<Signal> {
    let op = StftOperator::new(spec.config, spec.signal_length)?;
    let samples = op.adjoint(&spec.coeffs)?;
    Ok(Signal {
        samples,
        sample_rate,
    })
}

pub fn measure(signal: &Signal, cfg: StftConfig) -> Result<Measurements> {
    Ok(stft(signal, cfg)?.magnitudes())
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|c|` without the overflow guard of [`Complex::norm`], which makes that
/// one several times slower.
#[inline]
pub fn modulus(c: Complex) -> f64 {
    c.norm_sqr().sqrt()
}

pub fn cnorm(v: &[Complex]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn window_rejects_odd_and_zero() {
        assert!(make_sine_window(0).is_err());
        assert!(make_sine_window(7).is_err());
    }

    #[test]
    fn window_overlap_squared_unity() {
        for len in [2usize, 4, 16, 1024] {
            let w = make_sine_window(len).unwrap();
            let h = len / 2;
            for n in 0..h {
                let s = w[n] * w[n] + w[n + h] * w[n + h];
                assert!((s - 1.0).abs() < 1e-14, "len {len} n {n}: {s}");
            }
        }
    }

    #[test]
    fn window_first_sample_and_peak() {
        let w = make_sine_window(1024).unwrap();
        assert!((w[0] - 1.5340e-3).abs() < 1e-7);
        let max = w.iter().cloned().fold(f64::MIN, f64::max);
        let expected = (PI * (511.5) / 1024.0).sin();
        assert_eq!(w[511], w[512]);
        assert!((max - expected).abs() < 1e-15);
        assert!((w[511] - max).abs() < 1e-15);
    }

    #[test]
    fn zero_signal_zero_spectrogram() {
        let s = Signal::new(vec![0.0; 100], 8000).unwrap();
        let spec = stft(&s, StftConfig::new(16).unwrap()).unwrap();
        assert!(spec.coeffs.iter().all(|c| *c == Complex::default()));
        let back = istft(&spec, 8000).unwrap();
        assert!(back.samples.iter().all(|v| *v == 0.0));
        let r = measure(&s, StftConfig::new(16).unwrap()).unwrap();
        assert!(r.r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn impulse_column_magnitudes() {
        let cfg = StftConfig::new(16).unwrap();
        let len = 64;
        let n0 = 21;
        let mut x = vec![0.0; len];
        x[n0] = 1.0;
        let spec = stft(&Signal::new(x, 8000).unwrap(), cfg).unwrap();
        let w = make_sine_window(16).unwrap();
        let hop = cfg.hop();
        // padded position of the impulse
        let p = n0 + hop;
        for m in 0..spec.n_frames() {
            let start = m * hop;
            let expected = if p >= start && p < start + 16 {
                w[p - start].abs() / 4.0
            } else {
                0.0
            };
            for f in 0..16 {
                assert!((spec.get(f, m).norm() - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn perfect_reconstruction_parseval_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (len, wl) in [(1usize, 2usize), (7, 4), (100, 16), (257, 32), (1000, 64)] {
            let op = StftOperator::new(StftConfig::new(wl).unwrap(), len).unwrap();
            let x = random_signal(&mut rng, len);
            let a = op.forward(&x).unwrap();
            let back = op.adjoint(&a).unwrap();
            let err: f64 = x
                .iter()
                .zip(&back)
                .map(|(u, v)| (u - v).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-12 * norm(&x), "len {len}: {err}");
            assert!((cnorm(&a).powi(2) - norm(&x).powi(2)).abs() <= 1e-12 * norm(&x).powi(2));

            let s: Vec<Complex> = (0..op.coeff_len())
                .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let lhs: f64 = a.iter().zip(&s).map(|(u, v)| (u.conj() * v).re).sum();
            let ahs = op.adjoint(&s).unwrap();
            let rhs: f64 = x.iter().zip(&ahs).map(|(u, v)| u * v).sum();
            assert!((lhs - rhs).abs() <= 1e-12 * norm(&x) * cnorm(&s));
        }
    }

    #[test]
    fn measure_sign_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_signal(&mut rng, 300);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let cfg = StftConfig::new(32).unwrap();
        let r1 = measure(&Signal::new(x.clone(), 1).unwrap(), cfg).unwrap();
        let r2 = measure(&Signal::new(neg, 1).unwrap(), cfg).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.r.iter().all(|v| *v >= 0.0));
        assert!((r1.norm() - norm(&x)).abs() < 1e-12 * norm(&x));
    }

    #[test]
    fn istft_rejects_mismatched_shape() {
        let spec = Spectrogram {
            coeffs: vec![Complex::default(); 10],
            config: StftConfig::new(16).unwrap(),
            signal_length: 64,
        };
        assert!(matches!(istft(&spec, 1), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn signal_validation() {
        assert!(Signal::new(vec![], 1).is_err());
        assert!(Signal::new(vec![f64::NAN], 1).is_err());
        assert!(Measurements::new(vec![-1.0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn linearity(
                x in proptest::collection::vec(-1.0f64..1.0, 50),
                y in proptest::collection::vec(-1.0f64..1.0, 50),
                a in -3.0f64..3.0,
                b in -3.0f64..3.0,
            ) {
                let op = StftOperator::new(StftConfig::new(8).unwrap(), 50).unwrap();
                let comb: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
                let lhs = op.forward(&comb).unwrap();
                let fx = op.forward(&x).unwrap();
                let fy = op.forward(&y).unwrap();
                for ((l, u), v) in lhs.iter().zip(&fx).zip(&fy) {
                    prop_assert!((l - (u * a + v * b)).norm() < 1e-12);
                }
            }
        }
    }
}
