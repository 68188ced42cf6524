//! Quantum reservoir computing simulator focused on the linearity of input
//! encodings.
//!
//! The crate is organised bottom-up:
//!
//! * [`operator`]: dense complex linear algebra, density matrices, operator
//!   bases and column-stacking vectorization.
//! * [`encodings`]: discrete input channels parameterized by the input vector,
//!   plus Gaussian displacement and squeezing encodings.
//! * [`dynamics`]: Lindblad and adjoint master equations, fixed-step
//!   integration, first-order Magnus terms, the spectral (vectorized)
//!   solution and exact damped Gaussian evolution.
//! * [`linearity`]: numerical classification of encodings as linear or
//!   nonlinear per reservoir node.
//! * [`reservoir`]: stepped and continuous reservoir pipelines, ridge readout
//!   training and the memory / sine-estimation benchmarks.

pub mod dynamics;
pub mod encodings;
pub mod error;
pub mod linearity;
pub mod operator;
pub mod reservoir;

pub use error::{QrcError, Result};
pub use operator::{C64, CMat, CVec};
