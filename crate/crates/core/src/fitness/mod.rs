//! Fitness evaluation: the evaluator contract, throughput units, and the
//! pure evaluators (simulated model, replay cache).
//!
//! Fitness is network throughput in Mbit/s (10^6 bit/s), higher is better.
//! Latency is parsed for reporting but never enters the fitness.

mod replay;
mod sim;
mod tool_output;

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::paramspace::Chromosome;

pub use replay::{CacheMiss, Recording, ReplayCache, ReplayEvaluator};
pub use sim::{evaluate_simulated, Curve, GeneResponse, Interaction, ModelError, SimModel, SimulatedEvaluator};
pub use tool_output::{
    parse_latency_hping, parse_throughput_iperf, parse_throughput_netperf, LatencyReport,
    UnparseableOutput,
};

/// Non-negative, finite throughput in Mbit/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Throughput(f64);

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("invalid throughput {0}: must be finite and non-negative")]
pub struct InvalidThroughput(pub f64);

impl Throughput {
    pub const ZERO: Throughput = Throughput(0.0);

    pub fn from_mbps(mbps: f64) -> Result<Self, InvalidThroughput> {
        if mbps.is_finite() && mbps >= 0.0 {
            // -0.0 normalizes to 0.0 so reports never print "-0"
            Ok(Throughput(mbps + 0.0))
        } else {
            Err(InvalidThroughput(mbps))
        }
    }

    pub fn mbps(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Throughput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} Mbit/s", self.0)
    }
}

/// What the engine may assume about an evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Capabilities {
    /// Same chromosome always scores the same.
    pub deterministic: bool,
    /// Calls may run concurrently. Never true for anything touching the
    /// kernel.
    pub safe_for_parallel: bool,
}

/// Scores a chromosome. Implementations must return an error rather than a
/// placeholder value when they cannot measure.
pub trait FitnessEvaluator {
    type Error: core::error::Error + 'static;

    fn capabilities(&self) -> Capabilities;

    fn evaluate(&mut self, chromosome: &Chromosome) -> Result<Throughput, Self::Error>;
}

impl<E: FitnessEvaluator + ?Sized> FitnessEvaluator for &mut E {
    type Error = E::Error;

    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }

    fn evaluate(&mut self, chromosome: &Chromosome) -> Result<Throughput, Self::Error> {
        (**self).evaluate(chromosome)
    }
}

/// Scores everything zero. Stands in for the live benchmark during dry runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantZero;

impl FitnessEvaluator for ConstantZero {
    type Error = core::convert::Infallible;

    fn capabilities(&self) -> Capabilities {
        Capabilities { deterministic: true, safe_for_parallel: true }
    }

    fn evaluate(&mut self, _: &Chromosome) -> Result<Throughput, Self::Error> {
        Ok(Throughput::ZERO)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn throughput_rejects_bad_values() {
        assert!(Throughput::from_mbps(-1.0).is_err());
        assert!(Throughput::from_mbps(f64::NAN).is_err());
        assert!(Throughput::from_mbps(f64::INFINITY).is_err());
        assert_eq!(Throughput::from_mbps(-0.0).unwrap().mbps().to_bits(), 0f64.to_bits());
        assert_eq!(Throughput::from_mbps(941.23).unwrap().mbps(), 941.23);
    }
}
