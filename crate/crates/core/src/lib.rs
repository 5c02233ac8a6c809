//! Exact computer algebra for linear difference equations under shift,
//! q-scaling and Mahler operators over the Gaussian rationals ℚ(i).

pub mod criteria;
pub mod error;
pub mod operators;
pub mod relation_finder;
pub mod series_core;
pub mod special_functions;
pub mod systems;

pub use error::{Error, Result};
