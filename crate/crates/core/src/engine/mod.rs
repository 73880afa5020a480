//! The genetic life cycle: initialize, evaluate, cull, reproduce, mutate.

mod ops;
mod run;

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::fitness::Throughput;
use crate::paramspace::{Chromosome, ChromosomeError};

pub use ops::{crossover, cull, init_population, mutate, select_parents};
pub use run::{run, run_observed, RunError};

/// Parameters of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Fraction of the population culled each generation; the same count of
    /// top individuals become parents.
    pub selection_fraction: f64,
    /// Per-gene swap probability in uniform crossover.
    pub crossover_probability: f64,
    /// Probability that an offspring has one gene resampled.
    pub mutation_probability: f64,
    pub seed: u64,
    /// Also mutate surviving individuals each generation, discarding their
    /// cached fitness when hit.
    #[serde(default)]
    pub mutate_survivors: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 80,
            generations: 40,
            selection_fraction: 0.10,
            crossover_probability: 0.50,
            mutation_probability: 0.16,
            seed: 0,
            mutate_survivors: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("population size must be at least 2, got {0}")]
    PopulationTooSmall(usize),
    #[error("generation count must be at least 1")]
    NoGenerations,
    #[error("selection fraction must lie in (0, 0.5], got {0}")]
    SelectionFraction(f64),
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population_size < 2 {
            return Err(ConfigError::PopulationTooSmall(self.population_size));
        }
        if self.generations == 0 {
            return Err(ConfigError::NoGenerations);
        }
        let f = self.selection_fraction;
        if !(f > 0.0 && f <= 0.5) {
            return Err(ConfigError::SelectionFraction(f));
        }
        for (name, value) in [
            ("crossover probability", self.crossover_probability),
            ("mutation probability", self.mutation_probability),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { name, value });
            }
        }
        Ok(())
    }

    /// `floor(selection_fraction * population_size)`, tolerant of float
    /// products landing just under an integer.
    fn selected(&self) -> usize {
        (self.selection_fraction * self.population_size as f64 + 1e-9) as usize
    }

    /// Individuals removed per generation, and offspring added back. Never
    /// below one, so small populations still turn over.
    pub fn cull_count(&self) -> usize {
        self.selected().max(1)
    }

    /// Parents drawn per generation: the selected count, at least one pair,
    /// rounded down to whole pairs.
    pub fn parent_count(&self) -> usize {
        let n = self.selected().max(2);
        n - n % 2
    }

    /// Offspring per generation.
    pub fn offspring_count(&self) -> usize {
        self.cull_count()
    }
}

/// A chromosome with its cached fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    /// Unique within a run; creation order.
    pub id: u64,
    pub birth_generation: usize,
    pub chromosome: Chromosome,
    /// Set once, when the individual is first evaluated.
    pub fitness: Option<Throughput>,
}

impl Individual {
    pub fn new(id: u64, birth_generation: usize, chromosome: Chromosome) -> Self {
        Individual { id, birth_generation, chromosome, fitness: None }
    }
}

/// Population summary after one generation, Mbit/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub worst: f64,
    pub mean: f64,
    pub default_fitness: f64,
    pub best_chromosome: Chromosome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: GaConfig,
    /// SHA-256 of the space in parameter-file form.
    pub space_hash: String,
    pub space_size: usize,
    pub per_generation: alloc::vec::Vec<GenerationStats>,
    pub overall_best: Individual,
    pub evaluation_count: u64,
}

impl RunReport {
    pub fn mean_default(&self) -> f64 {
        mean(self.per_generation.iter().map(|g| g.default_fitness))
    }

    pub fn mean_best(&self) -> f64 {
        mean(self.per_generation.iter().map(|g| g.best))
    }

    pub fn overall_best_fitness(&self) -> f64 {
        self.overall_best.fitness.map(Throughput::mbps).unwrap_or(0.0)
    }

    /// `(overall best - mean default) / mean default * 100`.
    pub fn best_gain_percent(&self) -> Option<f64> {
        percent_over(self.overall_best_fitness(), self.mean_default())
    }

    /// `(mean of per-generation best - mean default) / mean default * 100`.
    pub fn mean_best_gain_percent(&self) -> Option<f64> {
        percent_over(self.mean_best(), self.mean_default())
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn percent_over(value: f64, baseline: f64) -> Option<f64> {
    (baseline > 0.0).then(|| (value - baseline) / baseline * 100.0)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("individual {0} has no fitness")]
    UnevaluatedIndividual(u64),
    #[error("parents belong to different spaces ({0} vs {1} genes)")]
    SpaceMismatch(usize, usize),
    #[error("invalid default chromosome: {0}")]
    InvalidDefault(ChromosomeError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

pub(crate) struct Who(pub Option<u64>);

impl fmt::Display for Who {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(id) => write!(f, "individual {id}"),
            None => f.write_str("default chromosome"),
        }
    }
}
