//! Learned residual model: features, network, training and persistence.

pub mod features;
pub mod gradcheck;
pub mod io;
pub mod network;
pub mod train;

pub use features::{feature_len, featurize, featurize_into, patch_len, spatial_len};
pub use gradcheck::gradient_check;
pub use io::{load_metadata, load_model, predict_residual, save_model, ModelMetadata};
pub use network::{Dense, ResidualModel};
pub use train::{
    build_dataset, dataset_loss, fine_tune, samples_hash, train, Dataset, Hyperparams, Optimizer,
    TrainOutcome,
};
