//! Exact and sampled checks that adding a bus makes lonely passengers more likely.

pub mod chain;
pub mod combinatorics;
pub mod coupling;
pub mod dist;
pub mod dominance;
pub mod error;
pub mod exec;
pub mod mc;
pub mod oracle;

pub use dist::{BigNat, ExactDist, Rational};
pub use error::{Error, Result};
pub use exec::Execution;
