//! Physics-informed neural network for the two-dimensional poroelastic
//! point-source problem, with the Barry–Mercer double series as data
//! generator and reference solution.

pub mod autodiff;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod io;
pub mod network;
pub mod oracle;
pub mod residual;
pub mod trainer;

pub use error::{Error, Result};
