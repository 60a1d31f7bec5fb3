//! Reverse-mode automatic differentiation substrate: dense matrices, a
//! recording tape, the Adam optimizer, and finite-difference verification.

pub mod adam;
pub mod gradcheck;
pub mod matrix;
pub mod tape;

pub use adam::{AdamConfig, AdamState};
pub use matrix::Matrix;
pub use tape::{Gradients, Tape, Var};
