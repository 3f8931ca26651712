//! Simulation and likelihood-based inference for partially observed Markov
//! process (POMP) models, with built-in cholera transmission models.

// `!(x >= 0.0)` deliberately rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod error;
pub mod euler;
pub mod exec;
pub mod forecast;
pub mod inference;
pub mod io;
pub mod mcap;
pub mod models;
pub mod pomp;
pub mod profile;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
pub use exec::Parallelism;
