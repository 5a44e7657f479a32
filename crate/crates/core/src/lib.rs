//! Automatic modulation classification workbench.
//!
//! * [`nn`]: differentiable kernels (convolution, pooling, recurrent cells,
//!   dense, dropout, loss, Adam, initializers) and a finite-difference
//!   gradient checker.
//! * [`synth`]: labeled IQ dataset synthesis with modulators, channel
//!   impairments, calibrated AWGN, stratified splits and a binary file format.
//! * [`models`]: CNN baseline, LSTM baseline and SCRNN family builders,
//!   forward/backward execution and weight files.
//! * [`train`]: mini-batch training with early stopping, per-SNR
//!   evaluation, confusion matrices, timing and ablation grids.
//! * [`cli`]: the `amc` command-line driver.

pub mod cli;
pub mod error;
pub mod models;
pub mod nn;
pub mod parallel;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use rng::SeededRng;
pub use tensor::{Scalar, Tensor};
