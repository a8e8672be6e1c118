//! Adaptive piecewise-linear activation
//! `APL(y) = max(y, 0) + Σ_c w_c max(-y + b_c, 0)` with `w_c = -w̃_c²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AplParams {
    /// Unconstrained slope parameters; the effective weights are `-w̃²`.
    pub w_tilde: Vec<f64>,
    /// Breakpoints of the extra segments.
    pub b: Vec<f64>,
}

impl AplParams {
    pub fn new(w_tilde: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if w_tilde.is_empty() || w_tilde.len() != b.len() {
            return Err(Error::InvalidArgument(format!(
                "APL needs C >= 1 matching slopes and biases, got {} and {}",
                w_tilde.len(),
                b.len()
            )));
        }
        Ok(AplParams { w_tilde, b })
    }

    /// `C = 1, w = -1, b = 0`: the identity map.
    pub fn identity() -> Self {
        AplParams {
            w_tilde: vec![1.0],
            b: vec![0.0],
        }
    }

    /// All slopes zero: a plain ReLU.
    pub fn relu(segments: usize) -> Self {
        AplParams {
            w_tilde: vec![0.0; segments],
            b: vec![0.0; segments],
        }
    }

    pub fn segments(&self) -> usize {
        self.w_tilde.len()
    }

    pub fn weight(&self, c: usize) -> f64 {
        -self.w_tilde[c] * self.w_tilde[c]
    }

    pub fn eval(&self, y: f64) -> f64 {
        let mut out = y.max(0.0);
        for (wt, b) in self.w_tilde.iter().zip(&self.b) {
            out -= wt * wt * (b - y).max(0.0);
        }
        out
    }

    /// Right-hand derivative with respect to the input.
    pub fn slope(&self, y: f64) -> f64 {
        let mut s = if y >= 0.0 { 1.0 } else { 0.0 };
        for (wt, b) in self.w_tilde.iter().zip(&self.b) {
            if y < *b {
                s += wt * wt;
            }
        }
        s
    }

    /// True when the unit is strictly increasing on the whole real line:
    /// some segment with `|w̃_c| >= tol` has a nonnegative breakpoint, so no
    /// negative input falls on a flat piece.
    pub fn is_strictly_increasing(&self, tol: f64) -> bool {
        self.w_tilde
            .iter()
            .zip(&self.b)
            .any(|(w, b)| w.abs() >= tol && *b >= 0.0)
    }
}

pub fn apl_forward(p: &AplParams, y: &[f64]) -> Vec<f64> {
    y.iter().map(|&v| p.eval(v)).collect()
}
