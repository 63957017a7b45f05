//! Dense-network numeric core: matrices, layered networks, softmax
//! cross-entropy with backpropagated gradients, momentum SGD and a
//! finite-difference gradient checker.
//!
//! All arithmetic is `f64`. Weights of a layer are stored `input_dim × output_dim`
//! so a batch `X` (rows = examples) maps to `X · W + b`.

mod gradcheck;
mod io;
mod matrix;
mod network;
mod optim;

pub use gradcheck::{grad_check, max_relative_error, numeric_gradient};
pub use io::{
    decode as decode_params, encode as encode_params, read_params, write_params,
    MAGIC as NKPM_MAGIC, VERSION as NKPM_VERSION,
};
pub use matrix::Matrix;
pub use network::{
    cross_entropy, init_params, log_softmax_rows, loss_and_grad, one_hot, softmax_rows,
    Activation, ForwardTrace, GradientBundle, Layer, LayerGrad, LayerSpec, ParameterSet,
};
pub use optim::{sgd_step, Velocity};
