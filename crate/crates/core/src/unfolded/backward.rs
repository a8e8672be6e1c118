//! Reverse-mode gradients through the unrolled layers.
//!
//! Complex cotangents are carried as `∂L/∂Re + i ∂L/∂Im`. With that
//! convention the cotangent of `x` in `a = Ax` is `Re A^H ā` (the STFT
//! adjoint), and the cotangent of `z` in `x = Re A^H z` is `A x̄`.

use super::forward::Tape;
use super::model::{ParamGrads, UnfoldedModel};
use crate::divergence::DOMAIN_FLOOR;
use crate::error::{Error, Result};
use crate::transforms::{Complex, StftOperator};

/// Gradient of a scalar loss with respect to the model parameters, given
/// the loss gradient with respect to the network output `x_T`.
pub fn uadmm_backward(
    model: &UnfoldedModel,
    op: &StftOperator,
    tape: &Tape,
    grad_xt: &[f64],
) -> Result<ParamGrads> {
    if tape.layers.len() != model.layers_count {
        return Err(Error::TapeMismatch(format!(
            "{} recorded layers, model has {}",
            tape.layers.len(),
            model.layers_count
        )));
    }
    if tape.tied != model.tied || tape.rho != model.rho {
        return Err(Error::TapeMismatch("tied flag or rho differ".into()));
    }
    if grad_xt.len() != op.signal_length() {
        return Err(Error::ShapeMismatch {
            expected: op.signal_length(),
            actual: grad_xt.len(),
            context: "output gradient",
        });
    }
    if tape.r.len() != op.coeff_len() {
        return Err(Error::TapeMismatch("measurement length".into()));
    }

    let rho = model.rho;
    let k = op.coeff_len();
    let c_count = model.segments;
    let mut grads = ParamGrads::zeros(model);

    // Cotangents of the current layer outputs (x_t, λ_t).
    let mut gx = grad_xt.to_vec();
    let mut gl = vec![Complex::default(); k];
    let mut gl_live = false;

    let mut gx_total = vec![0.0; op.signal_length()];
    let mut gv = vec![Complex::default(); k];
    let mut gz = vec![Complex::default(); k];
    let mut gh = vec![Complex::default(); k];
    let mut scaled = vec![Complex::default(); k];
    let mut tmp = vec![0.0; op.signal_length()];

    let mut r_term = vec![0.0; k];
    let mut r_dbeta = vec![0.0; k];
    let mut cached_block = usize::MAX;

    for t in (0..model.layers_count).rev() {
        let lt = &tape.layers[t];
        let params = model.layer(t);
        let block = model.block_of(t);
        if block != cached_block {
            for i in 0..k {
                (r_term[i], r_dbeta[i]) = params.r_term_with_dbeta(tape.r[i]);
            }
            cached_block = block;
        }

        // λ_t = λ_{t-1} + ρ(A x_t − v)
        gx_total.copy_from_slice(&gx);
        if gl_live {
            for (s, g) in scaled.iter_mut().zip(&gl) {
                *s = g * rho;
            }
            op.adjoint_into(&scaled, &mut tmp)?;
            for (a, b) in gx_total.iter_mut().zip(&tmp) {
                *a += b;
            }
        }
        // x_t = A^H z,  z = v − λ_{t-1}/ρ
        op.forward_into(&gx_total, &mut gz)?;
        for i in 0..k {
            gv[i] = gz[i] - gl[i] * rho;
        }

        let mut g_wt = vec![0.0; c_count];
        let mut g_b = vec![0.0; c_count];
        let (mut g_g1, mut g_g2, mut g_beta) = (0.0, 0.0, 0.0);
        let weights: Vec<f64> = (0..c_count).map(|c| params.apl.weight(c)).collect();

        for i in 0..k {
            let e = lt.phasor[i];
            // v = u e
            let g_u = (e.conj() * gv[i]).re;
            let g_e = gv[i] * lt.u[i];
            // u = APL(s)
            let s = lt.pre_activation[i];
            let g_s = params.apl.slope(s) * g_u;
            for c in 0..c_count {
                let bc = params.apl.b[c];
                if s < bc {
                    g_wt[c] += g_u * (-2.0 * params.apl.w_tilde[c]) * (bc - s);
                    g_b[c] += g_u * weights[c];
                }
            }
            // s = γ1 |h| + γ2 g(r, β)
            g_g1 += g_s * lt.magnitude[i];
            g_g2 += g_s * r_term[i];
            g_beta += g_s * params.gamma2 * r_dbeta[i];
            let g_m = params.gamma1 * g_s;
            // |h| and h/|h|
            let m = lt.magnitude[i].max(DOMAIN_FLOOR);
            let radial = (e.conj() * g_e).re;
            gh[i] = e * g_m + (g_e - e * radial) / m;
        }

        {
            let dst = grads.block_mut(block);
            for c in 0..c_count {
                dst[c] += g_wt[c];
                dst[c_count + c] += g_b[c];
            }
            dst[2 * c_count] += g_g1;
            dst[2 * c_count + 1] += g_g2;
            dst[2 * c_count + 2] += g_beta;
        }

        // h = A x_{t-1} + λ_{t-1}/ρ;  λ_{t-1} also feeds λ_t and z.
        op.adjoint_into(&gh, &mut gx)?;
        for i in 0..k {
            gl[i] += (gh[i] - gz[i]) / rho;
        }
        gl_live = true;
    }
    Ok(grads)
}
