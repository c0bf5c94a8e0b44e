//! Minimal deterministic differentiable kernel: dense matrices, MLPs with
//! explicit backward passes, Adam, Gumbel-softmax, a finite-difference
//! gradient oracle, and bit-exact checkpoints.

pub mod checkpoint;
pub mod gradcheck;
pub mod gumbel;
pub mod matrix;
pub mod mlp;
pub mod params;

pub use checkpoint::Checkpoint;
pub use gradcheck::{finite_diff_max_rel_err, grad_check};
pub use gumbel::{gumbel_argmax, gumbel_noise, gumbel_softmax, gumbel_softmax_with};
pub use matrix::Matrix;
pub use mlp::{
    apply_output, sigmoid, softmax_groups, Activation, LossKind, Mlp, MlpCache, MlpSpec,
    OutputActivation,
};
pub use params::{seeded_rng, Gradients, ParamStore};
