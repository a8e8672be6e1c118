use super::layer::LayerParams;
use crate::error::{Error, Result};

/// Network depth used when none is given.
pub const DEFAULT_LAYERS: usize = 15;
/// APL segments per sublayer used when none is given.
pub const DEFAULT_SEGMENTS: usize = 3;
/// Augmentation parameter of the linear layers and of the quadratic
/// initialization.
pub const DEFAULT_RHO: f64 = 1e-3;

/// `T` unfolded ADMM layers. A tied model stores a single parameter block
/// reused by every layer.
#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldedModel {
    pub layers_count: usize,
    pub segments: usize,
    pub tied: bool,
    pub rho: f64,
    pub layers: Vec<LayerParams>,
}

impl UnfoldedModel {
    pub fn quadratic(layers_count: usize, segments: usize, tied: bool, rho: f64) -> Result<Self> {
        if segments == 0 {
            return Err(Error::InvalidArgument("segment count must be >= 1".into()));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidRho(rho));
        }
        let blocks = if tied { 1 } else { layers_count };
        Ok(UnfoldedModel {
            layers_count,
            segments,
            tied,
            rho,
            layers: vec![LayerParams::quadratic(rho, segments); blocks],
        })
    }

    pub fn validate(&self) -> Result<()> {
        let blocks = if self.tied { 1 } else { self.layers_count };
        if self.layers.len() != blocks {
            return Err(Error::InvalidArgument(format!(
                "{} parameter blocks for a {} model with T = {}",
                self.layers.len(),
                if self.tied { "tied" } else { "untied" },
                self.layers_count
            )));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidRho(self.rho));
        }
        for l in &self.layers {
            if l.apl.segments() != self.segments || l.apl.b.len() != self.segments {
                return Err(Error::InvalidArgument(format!(
                    "layer has {} segments, model declares C = {}",
                    l.apl.segments(),
                    self.segments
                )));
            }
            l.check_beta()?;
        }
        Ok(())
    }

    /// Parameters used by layer `t` (0-based).
    pub fn layer(&self, t: usize) -> &LayerParams {
        if self.tied {
            &self.layers[0]
        } else {
            &self.layers[t]
        }
    }

    /// Index of the parameter block used by layer `t`.
    pub fn block_of(&self, t: usize) -> usize {
        if self.tied {
            0
        } else {
            t
        }
    }

    /// An untied model whose every layer carries this model's parameters
    /// for that layer.
    pub fn untie(&self) -> UnfoldedModel {
        UnfoldedModel {
            layers_count: self.layers_count,
            segments: self.segments,
            tied: false,
            rho: self.rho,
            layers: (0..self.layers_count)
                .map(|t| self.layer(t).clone())
                .collect(),
        }
    }

    pub fn block_len(&self) -> usize {
        2 * self.segments + 3
    }

    pub fn n_params(&self) -> usize {
        self.layers.len() * self.block_len()
    }

    /// Flattened parameters, per block `[w̃_1..w̃_C, b_1..b_C, γ1, γ2, β]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.apl.w_tilde);
            out.extend_from_slice(&l.apl.b);
            out.extend_from_slice(&[l.gamma1, l.gamma2, l.beta]);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::ShapeMismatch {
                expected: self.n_params(),
                actual: flat.len(),
                context: "flat parameters",
            });
        }
        let c = self.segments;
        for (l, chunk) in self.layers.iter_mut().zip(flat.chunks_exact(2 * c + 3)) {
            l.apl.w_tilde.copy_from_slice(&chunk[..c]);
            l.apl.b.copy_from_slice(&chunk[c..2 * c]);
            l.gamma1 = chunk[2 * c];
            l.gamma2 = chunk[2 * c + 1];
            l.beta = chunk[2 * c + 2];
        }
        Ok(())
    }
}

/// Gradient of a scalar loss with respect to every learnable parameter,
/// laid out like [`UnfoldedModel::to_flat`].
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrads {
    pub segments: usize,
    pub flat: Vec<f64>,
}

impl ParamGrads {
    pub fn zeros(model: &UnfoldedModel) -> Self {
        ParamGrads {
            segments: model.segments,
            flat: vec![0.0; model.n_params()],
        }
    }

    fn block_len(&self) -> usize {
        2 * self.segments + 3
    }

    pub fn block(&self, i: usize) -> &[f64] {
        let n = self.block_len();
        &self.flat[i * n..(i + 1) * n]
    }

    pub(crate) fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.block_len();
        &mut self.flat[i * n..(i + 1) * n]
    }

    pub fn w_tilde(&self, block: usize) -> &[f64] {
        &self.block(block)[..self.segments]
    }

    pub fn b(&self, block: usize) -> &[f64] {
        &self.block(block)[self.segments..2 * self.segments]
    }

    pub fn gamma1(&self, block: usize) -> f64 {
        self.block(block)[2 * self.segments]
    }

    pub fn gamma2(&self, block: usize) -> f64 {
        self.block(block)[2 * self.segments + 1]
    }

    pub fn beta(&self, block: usize) -> f64 {
        self.block(block)[2 * self.segments + 2]
    }

    pub fn add_scaled(&mut self, other: &ParamGrads, scale: f64) {
        for (a, b) in self.flat.iter_mut().zip(&other.flat) {
            *a += scale * b;
        }
    }
}
