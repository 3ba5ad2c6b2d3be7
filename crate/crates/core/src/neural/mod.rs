//! MLP, L2 loss and Adam optimizers.

mod adam;
mod loss;
mod mlp;

pub use adam::{adam_step_dense, adam_step_sparse, AdamConfig};
pub use loss::l2_loss;
pub use mlp::{leaky_relu, ForwardCache, Mlp, HIDDEN_LAYERS, HIDDEN_WIDTH, LEAKY_SLOPE};
