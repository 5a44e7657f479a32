//! Differentiable numerical kernels.

pub mod activation;
pub mod conv;
pub mod delta;
pub mod dense;
pub mod dropout;
pub mod gradcheck;
pub mod init;
pub mod loss;
pub mod optim;
pub mod pool;
pub mod rnn;

pub use activation::{activate, relu, relu_backward, softmax, softmax_backward, ActivationKind};
pub use conv::{conv1d, conv1d_backward, conv1d_forward, Conv1dCache, Conv1dGrads};
pub use delta::{take_branch_flip, Delta};
pub use dense::{dense, dense_backward, DenseGrads};
pub use dropout::{dropout, DropoutMask};
pub use gradcheck::{grad_check, FnObjective, GradCheckConfig, GradCheckReport, GradObjective};
pub use init::{init_params, InitScheme};
pub use loss::{cross_entropy, cross_entropy_indices};
pub use optim::{adam_step, max_norm_project, AdamConfig, AdamState, Parameter};
pub use pool::{maxpool1d, maxpool1d_backward, maxpool1d_forward, pooled_len, MaxPoolOutput};
pub use rnn::{
    rnn_sequence, rnn_sequence_backward, rnn_step, RnnCache, RnnCellParams, RnnGrads, RnnKind, RnnState,
    StateActivation,
};
