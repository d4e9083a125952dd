//! Splitting, loss, batching and gradient-based training.

mod batch;
mod loss;
mod split;
mod trainer;

pub use batch::{pad_batch, unpad};
pub use loss::{weighted_bce, LossWeights, CLAMP};
pub use split::{label_proportion_deviation, random_split, stratified_split, SplitResult};
pub use trainer::{
    evaluate_network, gradient_check, train_model, Samples, TensorCheck, TrainConfig, TrainHistory,
};
