//! Congestion simulation for point-to-point GPU interconnects.
//!
//! The crate models GPUs joined by bidirectional links, each made of two
//! directed sublinks, and computes how concurrent peer-to-peer copies inflate
//! the latency of a small probe transfer. Two experiments are built on top:
//!
//! * [`covert`]: a latency-threshold covert channel where a sender on one GPU
//!   modulates link congestion and a receiver on the other GPU decodes bits.
//! * [`fingerprint`]: a spy records a latency trace while a victim workload
//!   runs, and a k-nearest-neighbor classifier names the workload class.
//!
//! Everything runs on a single simulated clock and is fully reproducible from
//! a 64-bit seed.

pub mod cli;
pub mod config;
pub mod covert;
pub mod error;
pub mod fingerprint;
pub mod probe;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use sim::{Cycles, GpuId};
