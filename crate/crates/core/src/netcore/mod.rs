//! Small dense-network engine: forward passes, exact input Jacobians, and
//! parameter gradients of losses that include those Jacobians.

mod activation;
mod loss;
mod network;
mod optim;
mod train;

pub use activation::{Activation, ActivationValue, DEFAULT_LEAKY_SLOPE};
pub use loss::{mae_sign, param_gradients, Example, LossSpec, LossTerm, Selector};
pub use network::{DenseLayer, Evaluation, Network, Normalization};
pub use optim::Nadam;
pub use train::{train, train_network, History, HistoryRow, NetObjective, Objective, TrainConfig};
