//! Read-channel simulation for nanopore-based molecular data storage.
//!
//! Bits are encoded as homopolymer runs ([`codec`]), pushed through a calibrated
//! stochastic pore model ([`channel`], [`sim`]), and recovered from the raw
//! current trace ([`detector`]). [`analysis`] summarises traces and event lists,
//! [`capacity`] holds the storage and throughput arithmetic, and [`io`] plus
//! [`pipeline`] provide file formats, configuration and reproducible runs.

pub mod analysis;
pub mod capacity;
pub mod channel;
pub mod codec;
pub mod config;
pub mod detector;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
