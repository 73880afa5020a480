use alloc::vec::Vec;
use core::fmt;

use super::ops::{crossover, cull, init_population, mutate, select_parents};
use super::{EngineError, GaConfig, GenerationStats, Individual, RunReport, Who};
use crate::fitness::{FitnessEvaluator, Throughput};
use crate::paramspace::{Chromosome, ParameterSpace};
use crate::rng::RandomSource;

/// Why a run stopped early.
#[derive(Debug)]
pub enum RunError<E> {
    /// Bad configuration or default chromosome; nothing was evaluated.
    Setup(EngineError),
    /// The evaluator failed. `individual` is `None` for the default
    /// chromosome.
    Evaluation { generation: usize, individual: Option<u64>, source: E },
}

impl<E: fmt::Display> fmt::Display for RunError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Setup(e) => write!(f, "{e}"),
            RunError::Evaluation { generation, individual, source } => {
                write!(f, "generation {generation}, {}: {source}", Who(*individual))
            }
        }
    }
}

impl<E: core::error::Error + 'static> core::error::Error for RunError<E> {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            RunError::Setup(e) => Some(e),
            RunError::Evaluation { source, .. } => Some(source),
        }
    }
}

impl<E> From<EngineError> for RunError<E> {
    fn from(e: EngineError) -> Self {
        RunError::Setup(e)
    }
}

struct Loop<'a, E> {
    space: &'a ParameterSpace,
    config: &'a GaConfig,
    evaluator: E,
    rng: RandomSource,
    next_id: u64,
    evaluations: u64,
}

impl<E: FitnessEvaluator> Loop<'_, E> {
    /// Scores every individual without a fitness, in id order.
    fn evaluate_pending(&mut self, pop: &mut [Individual], generation: usize) -> Result<(), RunError<E::Error>> {
        for ind in pop.iter_mut().filter(|i| i.fitness.is_none()) {
            let t = self.evaluator.evaluate(&ind.chromosome).map_err(|source| RunError::Evaluation {
                generation,
                individual: Some(ind.id),
                source,
            })?;
            self.evaluations += 1;
            ind.fitness = Some(t);
        }
        Ok(())
    }

    fn offspring(&mut self, survivors: &[Individual], generation: usize) -> Result<Vec<Individual>, EngineError> {
        let wanted = self.config.offspring_count();
        let parents = select_parents(survivors, self.config.parent_count())?;
        let mut children = Vec::with_capacity(wanted + 1);
        for pair in parents.chunks_exact(2) {
            let (a, b) = crossover(
                &pair[0].chromosome,
                &pair[1].chromosome,
                self.config.crossover_probability,
                &mut self.rng,
            )?;
            children.push(a);
            children.push(b);
        }
        children.truncate(wanted);
        if children.len() < wanted {
            // too few pairs: top up with copies of the fittest
            let best = parents
                .first()
                .or_else(|| fittest(survivors))
                .map(|i| i.chromosome.clone())
                .unwrap_or_else(|| Chromosome::lower_bounds(self.space));
            children.resize(wanted, best);
        }
        Ok(children
            .into_iter()
            .map(|mut c| {
                mutate(&mut c, self.config.mutation_probability, self.space, &mut self.rng);
                let ind = Individual::new(self.next_id, generation + 1, c);
                self.next_id += 1;
                ind
            })
            .collect())
    }
}

fn fittest(pop: &[Individual]) -> Option<&Individual> {
    pop.iter().filter(|i| i.fitness.is_some()).fold(None, |best: Option<&Individual>, i| match best {
        Some(b) if b.fitness >= i.fitness => Some(b),
        _ => Some(i),
    })
}

fn stats(pop: &[Individual], generation: usize, default_fitness: Throughput) -> GenerationStats {
    let best = fittest(pop).expect("population is non-empty and evaluated");
    let values = pop.iter().filter_map(|i| i.fitness.map(Throughput::mbps));
    let (worst, sum, n) = values.fold((f64::INFINITY, 0.0, 0usize), |(w, s, n), v| (w.min(v), s + v, n + 1));
    GenerationStats {
        generation,
        best: best.fitness.map(Throughput::mbps).unwrap_or(0.0),
        worst,
        mean: sum / n as f64,
        default_fitness: default_fitness.mbps(),
        best_chromosome: best.chromosome.clone(),
    }
}

/// Runs the full life cycle and returns the per-generation record.
///
/// The initial population is evaluated first. Each generation then culls
/// the weakest, breeds replacements from the fittest pairs, mutates the
/// offspring, evaluates everything not yet scored (strictly one at a time,
/// in id order), re-measures `default_chromosome` as the baseline, and
/// records statistics. Fitness is cached per individual, so with a
/// deterministic evaluator the best value never decreases.
///
/// `default_chromosome` only has to match the space's shape: a system's
/// untuned values may fall outside the search ranges.
pub fn run<E: FitnessEvaluator>(
    space: &ParameterSpace,
    config: &GaConfig,
    evaluator: E,
    default_chromosome: &Chromosome,
) -> Result<RunReport, RunError<E::Error>> {
    run_observed(space, config, evaluator, default_chromosome, |_, _| {})
}

/// [`run`], calling `observer` after each generation's statistics are
/// recorded, with the full evaluated population in id order.
pub fn run_observed<E, F>(
    space: &ParameterSpace,
    config: &GaConfig,
    evaluator: E,
    default_chromosome: &Chromosome,
    mut observer: F,
) -> Result<RunReport, RunError<E::Error>>
where
    E: FitnessEvaluator,
    F: FnMut(&GenerationStats, &[Individual]),
{
    config.validate().map_err(EngineError::from)?;
    default_chromosome.check_shape(space).map_err(EngineError::InvalidDefault)?;

    let mut lp = Loop {
        space,
        config,
        evaluator,
        rng: RandomSource::from_seed(config.seed),
        next_id: config.population_size as u64,
        evaluations: 0,
    };
    let mut pop = init_population(space, config, &mut lp.rng);
    lp.evaluate_pending(&mut pop, 0)?;

    let mut per_generation = Vec::with_capacity(config.generations);
    let mut overall_best: Option<Individual> = None;
    for generation in 0..config.generations {
        let survivors = cull(pop, config.cull_count())?;
        let children = lp.offspring(&survivors, generation)?;
        pop = survivors;
        if config.mutate_survivors {
            for ind in pop.iter_mut() {
                if mutate(&mut ind.chromosome, config.mutation_probability, space, &mut lp.rng).is_some() {
                    ind.fitness = None;
                }
            }
        }
        pop.extend(children);
        lp.evaluate_pending(&mut pop, generation)?;

        let default_fitness = lp.evaluator.evaluate(default_chromosome).map_err(|source| RunError::Evaluation {
            generation,
            individual: None,
            source,
        })?;
        lp.evaluations += 1;

        let best = fittest(&pop).expect("population is non-empty");
        if overall_best.as_ref().is_none_or(|b| best.fitness > b.fitness) {
            overall_best = Some(best.clone());
        }
        let st = stats(&pop, generation, default_fitness);
        observer(&st, &pop);
        per_generation.push(st);
    }

    Ok(RunReport {
        config: config.clone(),
        space_hash: space.identity_hash(),
        space_size: space.len(),
        per_generation,
        overall_best: overall_best.expect("at least one generation"),
        evaluation_count: lp.evaluations,
    })
}
