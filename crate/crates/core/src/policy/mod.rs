//! The offloading decision network, its inputs and its training memory.

mod buffer;
mod checkpoint;
mod features;
mod net;

pub use buffer::{ReplayBuffer, Sample};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use features::{build_features, feature_len, solo_energies, standardize, FeatureVector};
pub use net::{
    adam_update, AdamConfig, AdamState, Dense, DropoutMasks, Gradients, NetShape, PolicyNet,
    LOG_EPSILON,
};
