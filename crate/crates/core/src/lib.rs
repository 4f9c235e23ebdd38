//! Multilayer perceptrons as forward state transformers and backward loss
//! transformers.
//!
//! A network runs forward on states ([`network`]) and pulls loss predicates
//! back along itself ([`loss`]). Backpropagation works on the derivatives of
//! those predicates, the erosions ([`backward`]), and one training step over a
//! whole network is the functorial update in [`backprop`]. Every analytic
//! derivative has a finite-difference counterpart in [`oracle`].

pub mod activation;
pub mod algebra;
pub mod backprop;
pub mod backward;
pub mod cli_io;
pub mod error;
pub mod loss;
pub mod network;
pub mod oracle;
pub mod random;

pub use activation::Activation;
pub use algebra::{Matrix, Vector};
pub use backprop::{
    backprop_step, functoriality_check, train, BackpropTrace, SgdConfig, TrainRecord,
};
pub use backward::{
    erosion_transform_layer, erosion_transform_net, layer_erosion_vector, layer_gradient,
    masked_update, ErosionPath, Gradient,
};
pub use error::{Error, Result};
pub use loss::{transform_loss, validity, validity_equation_check, LossKind, LossPredicate};
pub use network::{Layer, Mask, Network};
pub use oracle::{fd_erosion, fd_layer_gradient, FdConfig};
