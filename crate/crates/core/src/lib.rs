//! Shrinkage estimation for many binomial means and mean differences, tuned
//! by an approximately unbiased risk estimate.

pub mod cli;
pub mod data;
pub mod error;
pub mod infer;
pub mod numeric;
pub mod rng;
pub mod shrink;
pub mod stein;
pub mod sure;
pub mod thin;

pub use error::{Error, Result};
