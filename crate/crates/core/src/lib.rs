//! Mean square stabilization of LTI plants over a power constrained fading
//! channel `r = g·s + n`.
//!
//! - [`channel`]: the fading channel and seeded random streams
//! - [`capacity`]: exact capacities and stabilizability predicates
//! - [`codec`]: causal feedback encoder/decoder and its TDMA extension
//! - [`control`]: estimate-then-control law with a deadbeat gain
//! - [`sim`]: Monte Carlo harness, stability classification, sweeps
//! - [`output`]: CSV rendering shared by front ends

pub mod capacity;
pub mod channel;
pub mod codec;
pub mod control;
pub mod error;
pub mod output;
pub mod sim;

pub use error::{Error, Result};
