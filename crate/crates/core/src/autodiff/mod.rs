//! Derivative machinery: second-order forward jets for input derivatives,
//! a scalar reverse-mode tape for parameter gradients of arbitrary losses,
//! and finite-difference checks for both.

pub mod activation;
pub mod fdcheck;
pub mod jet;
pub mod scalar;
pub mod tape;

pub use activation::Activation;
pub use fdcheck::{fd_check, fd_check_gradient, fd_gradient, fd_jet, FdEntry, FdReport};
pub use jet::Jet2;
pub use scalar::Scalar;
pub use tape::{loss_parameter_gradient, GradientVector, Tape, Var};
