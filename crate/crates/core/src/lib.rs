//! Genetic search over operating-system network parameter spaces.
//!
//! This crate is `no_std` (with `alloc`) and contains everything that does
//! not touch the machine: the parameter-file grammar and genome encoding,
//! the genetic operators and run loop, the fitness-evaluator contract with
//! its simulated and replay implementations, and parsers for the text output
//! of `netperf`, `iperf` and `hping3`.
//!
//! Applying configurations to a live kernel, running benchmark processes and
//! reading or writing files lives in the `evotune` crate.
//!
//! ```
//! use evotune_core::engine::{self, GaConfig};
//! use evotune_core::fitness::{SimModel, SimulatedEvaluator};
//! use evotune_core::paramspace::{builtin_catalog, Chromosome};
//!
//! let space = builtin_catalog("listing1-14").unwrap();
//! let model = SimModel::neutral(&space, 500.0, 1000.0);
//! let mut eval = SimulatedEvaluator::new(&space, model, 0).unwrap();
//! let config = GaConfig { population_size: 10, generations: 3, ..GaConfig::default() };
//! let default = Chromosome::lower_bounds(&space);
//! let report = engine::run(&space, &config, &mut eval, &default).unwrap();
//! assert_eq!(report.per_generation.len(), 3);
//! ```
#![no_std]

extern crate alloc;

pub mod engine;
pub mod fitness;
pub mod fixtures;
pub mod paramspace;
pub mod rng;

pub use rng::RandomSource;
