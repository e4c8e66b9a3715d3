//! Online convex optimization with zeroth-order gradient estimates: a
//! statevector simulation of the quantum gradient estimator, the classical
//! finite-difference estimator, projected online gradient descent, and a
//! harness for measuring regret against certified bounds.

pub mod cgrad;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod losses;
pub mod ogd;
pub mod qgrad;

pub use error::{Error, Result};
