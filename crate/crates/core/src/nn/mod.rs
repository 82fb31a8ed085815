//! Minimal differentiable compute: dense tensors, a reverse-mode tape,
//! the layer set the dual sequence model needs, and an adaptive-moment
//! optimizer. Deterministic by construction; no dropout, no threads.

pub mod adam;
pub mod check;
pub mod layers;
pub mod tape;
pub mod tensor;

pub use adam::{optimizer_step, AdamHyper, AdamState};
pub use layers::{
    masked_attention, masked_cross_entropy, normal_init, pre_ln_encoder_layer, uniform_init,
    AttentionOutput, EncoderLayerVars, MaskMode, NnError,
};
pub use tape::{Gradients, Tape, Var, LAYER_NORM_EPS};
pub use tensor::{real, Real, Tensor};
