//! Reliable spanners: constructions that keep short paths for almost all
//! surviving pairs after an oblivious set of vertices is removed.

pub mod attacks;
pub mod cli;
pub mod error;
pub mod gradation;
pub mod harness;
pub mod hash;
pub mod loss;
pub mod lso;
pub mod resilience1d;
pub mod shadow;
pub mod spanner1d;
pub mod spannerhd;

pub use error::{Error, Result};
