//! Numerics for the one-dimensional KPZ equation: Fredholm determinants for the
//! exact one- and two-point laws, and the lattice models (ASEP, directed polymer,
//! discretized stochastic heat equation) that approximate it.

pub mod error;
pub mod rng;
pub mod specfun;

pub use error::{KpzError, Result};
pub mod distributions;
pub mod fredholm;
pub mod stats;
pub mod asep;
pub mod polymer;
pub mod she;
pub mod replica;
