//! Exact, desk-scale computations in `L₁[0,1]` renormed by
//!
//! ```text
//! ⦀f⦀ = ( Σ_{k≥0} 4^{-k} Σ_{j=1}^{2^k} ‖f‖²_{k,j} )^{1/2},   ‖f‖_{k,j} = ∫_{I(k,j)} |f| dλ,
//! ```
//!
//! a strictly convex norm whose unit ball nevertheless has relatively
//! weakly open subsets of diameter arbitrarily close to 2.
//!
//! Every function is a [`DyadicStep`] with exact rational values, every norm
//! comparison is made on exact squares, and every construction re-verifies
//! the identities it relies on.

pub mod cli;
pub mod dyadic;
pub mod error;
pub mod gen;
pub mod octahedral;
pub mod probes;
pub mod rational;
pub mod ured;
pub mod renorm;
pub mod selftest;
pub mod witness;

#[cfg(test)]
mod testutil;

pub use dyadic::{DyadicIndex, DyadicStep, MAX_LEVEL};
pub use error::{Error, Result};
pub use rational::Rational;
