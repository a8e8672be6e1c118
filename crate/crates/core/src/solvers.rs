//! Classical phase retrieval baselines: Griffin-Lim and ADMM on magnitude
//! measurements with a pluggable proximity operator.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::divergence::{prox_bruteforce, prox_quadratic_into, Generator};
use crate::error::{Error, Result};
use crate::transforms::{modulus, Complex, Measurements, Signal, StftOperator};

/// Proximity operator acting on the magnitudes `|h|` in the ADMM u-update.
pub trait MagnitudeProx {
    fn apply(&self, magnitudes: &[f64], r: &[f64], rho: f64, out: &mut [f64]) -> Result<()>;
}

/// Closed-form prox of the quadratic loss.
#[derive(Clone, Copy, Debug, Default)]
pub struct QuadraticProx;

impl MagnitudeProx for QuadraticProx {
    fn apply(&self, magnitudes: &[f64], r: &[f64], rho: f64, out: &mut [f64]) -> Result<()> {
        prox_quadratic_into(magnitudes, r, rho, out)
    }
}

/// Brute-force prox of a beta-divergence. Slow; for small problems only.
#[derive(Clone, Copy, Debug)]
pub struct BregmanProx(pub Generator);

impl MagnitudeProx for BregmanProx {
    fn apply(&self, magnitudes: &[f64], r: &[f64], rho: f64, out: &mut [f64]) -> Result<()> {
        let z = prox_bruteforce(&self.0, r, rho, magnitudes)?;
        out.copy_from_slice(&z);
        Ok(())
    }
}

/// Returns its input unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct PassThrough;

impl MagnitudeProx for PassThrough {
    fn apply(&self, magnitudes: &[f64], _r: &[f64], _rho: f64, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(magnitudes);
        Ok(())
    }
}

impl<F> MagnitudeProx for F
where
    F: Fn(&[f64], &[f64], f64, &mut [f64]) -> Result<()>,
{
    fn apply(&self, magnitudes: &[f64], r: &[f64], rho: f64, out: &mut [f64]) -> Result<()> {
        self(magnitudes, r, rho, out)
    }
}

#[derive(Clone, Debug)]
pub struct AdmmState {
    pub x: Signal,
    pub lambda: Vec<Complex>,
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    /// `‖|Ax_t| - r‖`
    pub objective: f64,
    /// `‖Ax_t - u_t ⊙ e^{iθ_t}‖`
    pub primal_residual: f64,
    /// Seconds since the solver started.
    pub elapsed: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
}

impl SolverTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }
}

/// Complex angle mapped into `[0, 2π)`, with `∠0 = 0`.
pub fn phase(h: Complex) -> f64 {
    let t = h.im.atan2(h.re);
    let t = if t < 0.0 { t + TAU } else { t };
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// `e^{i∠h}` for a value whose modulus `norm = |h|` is already known; the
/// unit `1` when `h = 0`, matching `∠0 = 0`.
pub fn phasor(h: Complex, norm: f64) -> Complex {
    if norm > 0.0 {
        h / norm
    } else {
        Complex::new(1.0, 0.0)
    }
}

pub fn unit_phasor(theta: f64) -> Complex {
    Complex::new(theta.cos(), theta.sin())
}

pub(crate) fn spectral_misfit(a: &[Complex], r: &[f64]) -> f64 {
    a.iter()
        .zip(r)
        .map(|(c, rk)| (modulus(*c) - rk).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn check_shapes(op: &StftOperator, r: &Measurements, x0: &Signal) -> Result<()> {
    if r.len() != op.coeff_len() {
        return Err(Error::ShapeMismatch {
            expected: op.coeff_len(),
            actual: r.len(),
            context: "measurements",
        });
    }
    if x0.len() != op.signal_length() {
        return Err(Error::ShapeMismatch {
            expected: op.signal_length(),
            actual: x0.len(),
            context: "initial signal",
        });
    }
    Ok(())
}

/// `x0 = A^H(r ⊙ e^{iφ})` with `φ` drawn uniformly on `[0, 2π)`.
pub fn random_phase_init<R: Rng + ?Sized>(
    op: &StftOperator,
    r: &Measurements,
    sample_rate: u32,
    rng: &mut R,
) -> Result<Signal> {
    let coeffs: Vec<Complex> =
        r.r.iter()
            .map(|&rk| unit_phasor(rng.random_range(0.0..TAU)) * rk)
            .collect();
    Ok(Signal {
        samples: op.adjoint(&coeffs)?,
        sample_rate,
    })
}

/// Griffin-Lim: `x ← A^H(r ⊙ e^{i∠Ax})`, `iters` times.
pub fn griffin_lim(
    op: &StftOperator,
    r: &Measurements,
    x0: &Signal,
    iters: usize,
) -> Result<(Signal, SolverTrace)> {
    check_shapes(op, r, x0)?;
    let start = Instant::now();
    let mut x = x0.samples.clone();
    let mut a = op.forward(&x)?;
    let mut target = vec![Complex::default(); a.len()];
    let mut trace = SolverTrace::default();
    for _ in 0..iters {
        for ((t, c), &rk) in target.iter_mut().zip(&a).zip(&r.r) {
            *t = phasor(*c, modulus(*c)) * rk;
        }
        op.adjoint_into(&target, &mut x)?;
        op.forward_into(&x, &mut a)?;
        let residual = a
            .iter()
            .zip(&target)
            .map(|(u, v)| (u - v).norm_sqr())
            .sum::<f64>()
            .sqrt();
        trace.records.push(IterationRecord {
            objective: spectral_misfit(&a, &r.r),
            primal_residual: residual,
            elapsed: start.elapsed().as_secs_f64(),
        });
    }
    Ok((
        Signal {
            samples: x,
            sample_rate: x0.sample_rate,
        },
        trace,
    ))
}

/// ADMM on the magnitude-constrained problem, `iters` iterations:
///
/// ```text
/// h ← Ax + λ/ρ
/// u ← prox(|h|, r, ρ)
/// θ ← ∠h
/// x ← A^H(u ⊙ e^{iθ} − λ/ρ)
/// λ ← λ + ρ(Ax − u ⊙ e^{iθ})
/// ```
pub fn admm_pr<P: MagnitudeProx + ?Sized>(
    op: &StftOperator,
    r: &Measurements,
    x0: &Signal,
    lambda0: &[Complex],
    rho: f64,
    prox: &P,
    iters: usize,
) -> Result<(AdmmState, SolverTrace)> {
    admm_pr_observed(op, r, x0, lambda0, rho, prox, iters, |_, _, _| {})
}

/// [`admm_pr`] calling `observe(t, x_t, λ_t)` after every iteration.
#[allow(clippy::too_many_arguments)]
pub fn admm_pr_observed<P, O>(
    op: &StftOperator,
    r: &Measurements,
    x0: &Signal,
    lambda0: &[Complex],
    rho: f64,
    prox: &P,
    iters: usize,
    mut observe: O,
) -> Result<(AdmmState, SolverTrace)>
where
    P: MagnitudeProx + ?Sized,
    O: FnMut(usize, &[f64], &[Complex]),
{
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidRho(rho));
    }
    check_shapes(op, r, x0)?;
    if lambda0.len() != op.coeff_len() {
        return Err(Error::ShapeMismatch {
            expected: op.coeff_len(),
            actual: lambda0.len(),
            context: "lambda0",
        });
    }
    let start = Instant::now();
    let k = op.coeff_len();
    let mut x = x0.samples.clone();
    let mut lambda = lambda0.to_vec();
    let mut a = op.forward(&x)?;
    let mut h = vec![Complex::default(); k];
    let mut mag = vec![0.0; k];
    let mut u = vec![0.0; k];
    let mut v = vec![Complex::default(); k];
    let mut z = vec![Complex::default(); k];
    let mut trace = SolverTrace::default();
    for t in 0..iters {
        for i in 0..k {
            h[i] = a[i] + lambda[i] / rho;
            mag[i] = modulus(h[i]);
        }
        prox.apply(&mag, &r.r, rho, &mut u)?;
        for i in 0..k {
            v[i] = phasor(h[i], mag[i]) * u[i];
            z[i] = v[i] - lambda[i] / rho;
        }
        op.adjoint_into(&z, &mut x)?;
        op.forward_into(&x, &mut a)?;
        let mut residual = 0.0;
        for i in 0..k {
            let d = a[i] - v[i];
            lambda[i] += d * rho;
            residual += d.norm_sqr();
        }
        trace.records.push(IterationRecord {
            objective: spectral_misfit(&a, &r.r),
            primal_residual: residual.sqrt(),
            elapsed: start.elapsed().as_secs_f64(),
        });
        observe(t, &x, &lambda);
    }
    Ok((
        AdmmState {
            x: Signal {
                samples: x,
                sample_rate: x0.sample_rate,
            },
            lambda,
            rho,
        },
        trace,
    ))
}

/// `‖|Ax| − r‖ / ‖r‖`.
pub fn spectral_distance(op: &StftOperator, x: &[f64], r: &Measurements) -> Result<f64> {
    let a = op.forward(x)?;
    Ok(spectral_misfit(&a, &r.r) / r.norm().max(f64::MIN_POSITIVE))
}
