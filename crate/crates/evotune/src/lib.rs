//! Applies genetic search to a Linux host's network parameters.
//!
//! The search itself lives in [`evotune_core`]; this crate supplies the
//! parts that touch the outside world: running `sysctl`/`ip` with snapshot
//! and restore ([`sysapply`]), measuring throughput with an external
//! benchmark ([`live`]), file formats ([`files`]) and the command line
//! ([`cli`]).

pub mod cli;
pub mod files;
pub mod live;
pub mod runner;
pub mod sysapply;

pub use evotune_core as core;
