//! Forward pass of the unfolded network.
//!
//! Layer `t` maps `(x, λ)` to `(x', λ')`:
//!
//! ```text
//! h  = Ax + λ/ρ                        linear part 1
//! u  = F_t(|h|, r),  e^{iθ} = h/|h|     nonlinear part
//! x' = A^H(u ⊙ e^{iθ} − λ/ρ)           linear part 2
//! λ' = λ + ρ(Ax' − u ⊙ e^{iθ})
//! ```

use super::model::UnfoldedModel;
use crate::error::{Error, Result};
use crate::solvers::phasor;
use crate::transforms::{modulus, Complex, Measurements, Signal, StftOperator};

/// Intermediates of one layer, enough to run the backward pass without
/// recomputing anything.
#[derive(Clone, Debug)]
pub struct LayerTape {
    pub h: Vec<Complex>,
    pub magnitude: Vec<f64>,
    /// `e^{i∠h}`.
    pub phasor: Vec<Complex>,
    /// APL input `γ1 |h| + γ2 r^(β−1)/(β−1)`.
    pub pre_activation: Vec<f64>,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub lambda: Vec<Complex>,
}

#[derive(Clone, Debug)]
pub struct Tape {
    pub layers: Vec<LayerTape>,
    pub r: Vec<f64>,
    pub rho: f64,
    pub tied: bool,
}

fn check_inputs(
    model: &UnfoldedModel,
    op: &StftOperator,
    r: &Measurements,
    x0: &Signal,
    lambda0: &[Complex],
) -> Result<()> {
    model.validate()?;
    let shapes = [
        (r.len(), op.coeff_len(), "measurements"),
        (lambda0.len(), op.coeff_len(), "lambda0"),
        (x0.len(), op.signal_length(), "initial signal"),
    ];
    for (actual, expected, context) in shapes {
        if actual != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual,
                context,
            });
        }
    }
    Ok(())
}

fn run(
    model: &UnfoldedModel,
    op: &StftOperator,
    r: &Measurements,
    x0: &Signal,
    lambda0: &[Complex],
    mut tape: Option<&mut Vec<LayerTape>>,
    mut observe: impl FnMut(usize, &[f64], &[Complex]),
) -> Result<(Vec<f64>, Vec<Complex>)> {
    check_inputs(model, op, r, x0, lambda0)?;
    let rho = model.rho;
    let k = op.coeff_len();
    let mut x = x0.samples.clone();
    let mut lambda = lambda0.to_vec();
    if model.layers_count == 0 {
        return Ok((x, lambda));
    }
    let mut a = op.forward(&x)?;
    let mut h = vec![Complex::default(); k];
    let mut mag = vec![0.0; k];
    let mut e = vec![Complex::default(); k];
    let mut pre = vec![0.0; k];
    let mut u = vec![0.0; k];
    let mut v = vec![Complex::default(); k];
    let mut z = vec![Complex::default(); k];
    let mut r_term = vec![0.0; k];
    let mut cached_block = usize::MAX;

    for t in 0..model.layers_count {
        let params = model.layer(t);
        let block = model.block_of(t);
        if block != cached_block {
            for (g, &rk) in r_term.iter_mut().zip(&r.r) {
                *g = params.r_term(rk);
            }
            cached_block = block;
        }
        for i in 0..k {
            h[i] = a[i] + lambda[i] / rho;
            mag[i] = modulus(h[i]);
            e[i] = phasor(h[i], mag[i]);
            pre[i] = params.pre_activation(mag[i], r_term[i]);
            u[i] = params.apl.eval(pre[i]);
            v[i] = e[i] * u[i];
            z[i] = v[i] - lambda[i] / rho;
        }
        op.adjoint_into(&z, &mut x)?;
        op.forward_into(&x, &mut a)?;
        for i in 0..k {
            lambda[i] += (a[i] - v[i]) * rho;
        }
        observe(t, &x, &lambda);
        if let Some(tape) = tape.as_deref_mut() {
            tape.push(LayerTape {
                h: h.clone(),
                magnitude: mag.clone(),
                phasor: e.clone(),
                pre_activation: pre.clone(),
                u: u.clone(),
                x: x.clone(),
                lambda: lambda.clone(),
            });
        }
    }
    Ok((x, lambda))
}

/// Runs all `T` layers, recording a [`Tape`] for [`super::uadmm_backward`].
pub fn uadmm_forward(
    model: &UnfoldedModel,
    op: &StftOperator,
    r: &Measurements,
    x0: &Signal,
    lambda0: &[Complex],
) -> Result<(Signal, Vec<Complex>, Tape)> {
    let mut layers = Vec::with_capacity(model.layers_count);
    let (x, lambda) = run(model, op, r, x0, lambda0, Some(&mut layers), |_, _, _| {})?;
    let tape = Tape {
        layers,
        r: r.r.clone(),
        rho: model.rho,
        tied: model.tied,
    };
    Ok((
        Signal {
            samples: x,
            sample_rate: x0.sample_rate,
        },
        lambda,
        tape,
    ))
}

/// Forward pass without a tape.
pub fn uadmm_apply(
    model: &UnfoldedModel,
    op: &StftOperator,
    r: &Measurements,
    x0: &Signal,
    lambda0: &[Complex],
) -> Result<(Signal, Vec<Complex>)> {
    uadmm_apply_observed(model, op, r, x0, lambda0, |_, _, _| {})
}

/// Forward pass calling `observe(t, x_t, λ_t)` after every layer.
pub fn uadmm_apply_observed(
    model: &UnfoldedModel,
    op: &StftOperator,
    r: &Measurements,
    x0: &Signal,
    lambda0: &[Complex],
    observe: impl FnMut(usize, &[f64], &[Complex]),
) -> Result<(Signal, Vec<Complex>)> {
    let (x, lambda) = run(model, op, r, x0, lambda0, None, observe)?;
    Ok((
        Signal {
            samples: x,
            sample_rate: x0.sample_rate,
        },
        lambda,
    ))
}

/// Applies the whole network `k` times, feeding each output `(x, λ)` into
/// the next application. Starts from `λ = 0`.
pub fn iterate_model(
    model: &UnfoldedModel,
    op: &StftOperator,
    r: &Measurements,
    x0: &Signal,
    k: usize,
) -> Result<Signal> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "the network must be applied at least once".into(),
        ));
    }
    let mut x = x0.clone();
    let mut lambda = vec![Complex::default(); op.coeff_len()];
    for _ in 0..k {
        let (nx, nl) = uadmm_apply(model, op, r, &x, &lambda)?;
        x = nx;
        lambda = nl;
    }
    Ok(x)
}
