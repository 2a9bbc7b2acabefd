//! Bin-splitting bandit policies for noisy black-box minimization.
//!
//! A decision space is tiled into bins; a policy repeatedly proposes a
//! query point, receives a noisy loss, and concentrates its queries where
//! the loss looks small using lower confidence bounds. The fixed-grid
//! policy commits to one resolution up front; the adaptive policy starts
//! coarse and splits promising bins into half-length children, earning a
//! strictly better regret exponent whenever near-optimal volume shrinks
//! faster than linearly with the tolerance.
//!
//! Start with the `examples/` directory: each example exercises one major
//! capability end to end (ask/tell protocol, full experiment runs, bin
//! size sweeps, rate fitting, regularity diagnostics).

pub mod analysis;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod objective;
pub mod policy;
pub mod report;
pub mod space;

pub use error::{Error, Result};
