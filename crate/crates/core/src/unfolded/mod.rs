//! The unfolded ADMM network: each layer is one ADMM iteration whose
//! proximity operator is replaced by a trainable sublayer
//! `F(y, r) = APL(γ1 y + γ2 r^(β−1)/(β−1))`.

mod adam;
mod apl;
mod backward;
mod checkpoint;
mod forward;
mod layer;
mod loss;
mod model;
mod train;

pub use adam::{adam_update, AdamConfig, AdamState};
pub use apl::{apl_forward, AplParams};
pub use backward::uadmm_backward;
pub use checkpoint::{Checkpoint, TrainingMetadata, FORMAT_VERSION};
pub use forward::{
    iterate_model, uadmm_apply, uadmm_apply_observed, uadmm_forward, LayerTape, Tape,
};
pub use layer::{sublayer_F, LayerParams, BETA_GUARD, INIT_SLOPES};
pub use loss::{si_sdr, training_loss, LOSS_FLOOR_DB};
pub use model::{ParamGrads, UnfoldedModel, DEFAULT_LAYERS, DEFAULT_RHO, DEFAULT_SEGMENTS};
pub use train::{mean_loss, train, EpochRecord, Example, TrainConfig, TrainHistory};
