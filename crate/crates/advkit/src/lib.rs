//! Desk-scale adversarial robustness toolkit.
//!
//! Everything runs on a laptop in seconds: small ReLU networks built on a
//! dense `f64` tensor core, gradient-based and optimization-based attacks,
//! adversarial training as a defense, cross-model transfer measurement,
//! and a vulnerability scoring report that turns measured attack success
//! into an industry-style severity rating.
//!
//! Determinism is a design constraint, not an afterthought: every random
//! choice flows from an explicit seed through [`rng::RngStream`], numeric
//! reductions fix their summation order, and identical inputs produce
//! bit-identical outputs on every run.

pub mod attack;
pub mod data;
pub mod defense;
pub mod error;
pub mod fsio;
pub mod model;
pub mod rng;
pub mod selftest;
pub mod tensor;
pub mod transfer;
pub mod vulnscore;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use tensor::Tensor;
