use serde::{Deserialize, Serialize};

use super::apl::AplParams;
use crate::divergence::{quadratic_weights, DOMAIN_FLOOR};
use crate::error::{Error, Result};

/// `|β − 1|` must stay above this.
pub const BETA_GUARD: f64 = 1e-3;

/// Slope parameters of the quadratic initialization. Any nonzero values
/// leave the sublayer equal to the quadratic prox on nonnegative inputs
/// (all breakpoints sit at zero); distinct values keep the segments from
/// receiving identical updates.
pub const INIT_SLOPES: [f64; 3] = [0.1, 0.2, 0.3];

/// Learnable parameters of one prox sublayer
/// `F(y, r) = APL(γ1 y + γ2 r^(β−1)/(β−1))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerParams {
    pub apl: AplParams,
    pub gamma1: f64,
    pub gamma2: f64,
    pub beta: f64,
}

impl LayerParams {
    /// Parameters for which `F` equals the quadratic-loss prox
    /// `(y + r/ρ)/(1 + 1/ρ)` on nonnegative inputs.
    pub fn quadratic(rho: f64, segments: usize) -> Self {
        let (gamma1, gamma2) = quadratic_weights(rho);
        let w_tilde = (0..segments)
            .map(|c| INIT_SLOPES[c % INIT_SLOPES.len()] * (1 + c / INIT_SLOPES.len()) as f64)
            .collect();
        LayerParams {
            apl: AplParams {
                w_tilde,
                b: vec![0.0; segments],
            },
            gamma1,
            gamma2,
            beta: 2.0,
        }
    }

    pub fn check_beta(&self) -> Result<()> {
        if (self.beta - 1.0).abs() <= BETA_GUARD || !self.beta.is_finite() {
            return Err(Error::BetaSingular(self.beta));
        }
        Ok(())
    }

    /// `r^(β−1)/(β−1)`. For `β < 1` the power blows up at zero, so `r` is
    /// floored at the domain floor there.
    pub fn r_term(&self, r: f64) -> f64 {
        let bm1 = self.beta - 1.0;
        self.effective_r(r).powf(bm1) / bm1
    }

    /// `∂/∂β` of [`Self::r_term`].
    pub fn r_term_dbeta(&self, r: f64) -> f64 {
        self.r_term_with_dbeta(r).1
    }

    /// [`Self::r_term`] and [`Self::r_term_dbeta`] sharing one power.
    pub fn r_term_with_dbeta(&self, r: f64) -> (f64, f64) {
        let bm1 = self.beta - 1.0;
        let r = self.effective_r(r);
        let p = r.powf(bm1);
        let d = if r == 0.0 {
            0.0
        } else {
            p * (r.ln() * bm1 - 1.0) / (bm1 * bm1)
        };
        (p / bm1, d)
    }

    fn effective_r(&self, r: f64) -> f64 {
        if self.beta > 1.0 {
            r.max(0.0)
        } else {
            r.max(DOMAIN_FLOOR)
        }
    }

    pub fn pre_activation(&self, y: f64, r_term: f64) -> f64 {
        self.gamma1 * y + self.gamma2 * r_term
    }

    /// Moves β back outside the singular band around 1, keeping the side
    /// it was on before.
    pub(crate) fn project_beta(&mut self, previous: f64) {
        if (self.beta - 1.0).abs() <= BETA_GUARD {
            let side = if previous >= 1.0 { 1.0 } else { -1.0 };
            self.beta = 1.0 + side * BETA_GUARD * (1.0 + 1e-6);
        }
    }
}

/// `F(y, r)` elementwise.
#[allow(non_snake_case)]
pub fn sublayer_F(p: &LayerParams, y: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    p.check_beta()?;
    if y.len() != r.len() {
        return Err(Error::ShapeMismatch {
            expected: r.len(),
            actual: y.len(),
            context: "sublayer input",
        });
    }
    Ok(y.iter()
        .zip(r)
        .map(|(&yk, &rk)| p.apl.eval(p.pre_activation(yk, p.r_term(rk))))
        .collect())
}
