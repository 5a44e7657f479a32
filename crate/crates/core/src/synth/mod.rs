//! Synthetic labeled IQ data: modulators, channel model, AWGN calibration,
//! dataset generation, stratified splits and the binary dataset format.

pub mod channel;
pub mod dataset;
pub mod format;
pub mod modtype;
pub mod modulate;
pub mod pulse;

pub use channel::{add_awgn, apply_channel, measure_snr, ChannelConfig, FadingTap};
pub use dataset::{
    build_dataset, build_dataset_with_workers, generate_sample, split_indices, split_stratified, to_amplitude_phase,
    Dataset, GenConfig, InputFormat, IqFrame, LabeledSample, SNR_LADDER,
};
pub use format::{decode_dataset, encode_dataset, read_dataset, write_dataset};
pub use modtype::{ModType, NUM_CLASSES};
pub use modulate::{modulate_analog, modulate_fsk, modulate_linear, synth_audio, synth_audio_with};
pub use pulse::rrc_taps;
