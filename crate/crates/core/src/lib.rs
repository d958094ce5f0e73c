//! Data-parallel training of a small 1-D CNN that detects homotypic
//! motif clusters in simulated DNA.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: dense tensors and the conv / pool / dense / activation
//!   kernels with hand-written backward passes.
//! - [`genome_sim`]: PWM-driven sequence simulator and FASTA / PWM file I/O.
//! - [`pipeline`]: one-hot encoding, stratified splitting, buffered
//!   shuffling, batching and per-replica sharding.
//! - [`model`]: the conv → maxpool → dense → sigmoid network, BCE loss,
//!   Adam and checkpoints.
//! - [`collective`]: in-process transport plus ring all-reduce, parameter
//!   server and gossip aggregation.
//! - [`trainer`]: synchronous multi-worker training loop, metrics and the
//!   scaling benchmark.
//! - [`cli`]: the `dcnn` command-line front end.

pub mod cli;
pub mod collective;
pub mod error;
pub mod genome_sim;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
