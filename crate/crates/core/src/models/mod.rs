//! Architecture specs, executable networks and weight files.

pub mod network;
pub mod spec;
pub mod weights;

pub use network::{check_model_gradients, Network, NetworkObjective, Trace};
pub use spec::{
    build_cnn_baseline, build_lstm_baseline, build_scrnn, ActShape, Arch, LayerSpec, ModelSpec, ScrnnHead,
    ScrnnVariant, DROPOUT_RATE, SCRNN_MAX_NORM,
};
pub use weights::{decode_weights, encode_weights, load_weights, load_weights_for, save_weights};
