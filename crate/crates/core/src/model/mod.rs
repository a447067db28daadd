//! RBM layers, CD-1 training, greedy stacking, the translational first layer
//! and model persistence.

mod autoencoder;
mod io;
mod rbm;
mod train;
mod trbm;

pub use autoencoder::{
    train_stack, us_input_len, us_inputs, validation_error, DeepAutoencoder, FirstLayerMode,
};
pub use io::{decode_model, encode_model, fnv1a64, load_model, save_model};
pub use rbm::{cd1_step, init_rbm, Rbm, StepParams, Velocity};
pub use train::{
    train_rbm, EpochObserver, EpochRecord, LayerOptions, Silent, TrainConfig, TrainReport,
    REPORT_CSV_HEADER,
};
pub use trbm::{cross_entropy, mean_entropy, train_trbm, TrbmInit, TrbmReport};
