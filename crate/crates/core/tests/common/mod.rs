#![allow(dead_code)]

use pr_core::harness::synth::speech_like;
use pr_core::unfolded::UnfoldedModel;
use pr_core::{Complex, Measurements, Signal, StftConfig, StftOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_signal(rng: &mut impl Rng, len: usize) -> Signal {
    Signal::new(
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
        16000,
    )
    .unwrap()
}

pub fn random_coeffs(rng: &mut impl Rng, len: usize, scale: f64) -> Vec<Complex> {
    (0..len)
        .map(|_| {
            Complex::new(
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
            )
        })
        .collect()
}

pub struct Problem {
    pub op: StftOperator,
    pub reference: Signal,
    pub r: Measurements,
}

pub fn problem(reference: Signal, window: usize) -> Problem {
    let op = StftOperator::new(StftConfig::new(window).unwrap(), reference.len()).unwrap();
    let r = Measurements {
        r: op
            .forward(&reference.samples)
            .unwrap()
            .iter()
            .map(|c| c.norm())
            .collect(),
    };
    Problem { op, reference, r }
}

pub fn speech_problem(seed: u64, label: &str, seconds: f64, window: usize) -> Problem {
    problem(speech_like(seed, label, 16000, seconds).unwrap(), window)
}

/// Untied model with every parameter drawn at random, kept away from the
/// singular β band.
pub fn random_model(rng: &mut impl Rng, layers: usize, segments: usize, rho: f64) -> UnfoldedModel {
    let mut m = UnfoldedModel::quadratic(layers, segments, false, rho).unwrap();
    for l in &mut m.layers {
        for w in &mut l.apl.w_tilde {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            *w = sign * rng.random_range(0.2..1.0);
        }
        for b in &mut l.apl.b {
            *b = rng.random_range(-0.5..1.5);
        }
        l.gamma1 = rng.random_range(0.3..1.0);
        l.gamma2 = rng.random_range(0.1..1.0);
        l.beta = rng.random_range(1.3..2.7);
    }
    m
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn rel_err_c(a: &[Complex], b: &[Complex]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// A sublayer whose APL unit is strictly increasing on the whole line.
pub fn random_invertible_layer(
    rng: &mut impl Rng,
    segments: usize,
) -> pr_core::unfolded::LayerParams {
    use pr_core::unfolded::{AplParams, LayerParams};
    let w: Vec<f64> = (0..segments)
        .map(|_| rng.random_range(0.2..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let mut b: Vec<f64> = (0..segments).map(|_| rng.random_range(-1.5..2.0)).collect();
    b[0] = b[0].abs();
    let beta = if rng.random_bool(0.5) {
        rng.random_range(0.3..0.9)
    } else {
        rng.random_range(1.1..2.6)
    };
    LayerParams {
        apl: AplParams::new(w, b).unwrap(),
        gamma1: rng.random_range(0.2..1.5),
        gamma2: rng.random_range(0.05..1.0),
        beta,
    }
}
