use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{EngineError, GaConfig, Individual};
use crate::fitness::Throughput;
use crate::paramspace::{sample_chromosome, Chromosome, ParameterSpace};
use crate::rng::RandomSource;

/// `population_size` freshly sampled individuals, ids `0..n`, unevaluated.
pub fn init_population(space: &ParameterSpace, config: &GaConfig, rng: &mut RandomSource) -> Vec<Individual> {
    (0..config.population_size)
        .map(|i| Individual::new(i as u64, 0, sample_chromosome(space, rng)))
        .collect()
}

fn fitness_of(ind: &Individual) -> Result<Throughput, EngineError> {
    ind.fitness.ok_or(EngineError::UnevaluatedIndividual(ind.id))
}

fn check_evaluated(population: &[Individual]) -> Result<(), EngineError> {
    population.iter().try_for_each(|i| fitness_of(i).map(drop))
}

/// Weakest first; among equal fitness, the older (lower id) first.
fn weakest_first(a: &Individual, b: &Individual) -> Ordering {
    let fa = a.fitness.map(Throughput::mbps).unwrap_or(0.0);
    let fb = b.fitness.map(Throughput::mbps).unwrap_or(0.0);
    fa.total_cmp(&fb).then(a.id.cmp(&b.id))
}

/// Fittest first; among equal fitness, the older (lower id) first.
fn fittest_first(a: &Individual, b: &Individual) -> Ordering {
    let fa = a.fitness.map(Throughput::mbps).unwrap_or(0.0);
    let fb = b.fitness.map(Throughput::mbps).unwrap_or(0.0);
    fb.total_cmp(&fa).then(a.id.cmp(&b.id))
}

/// Removes the `count` least fit individuals. Survivors keep their
/// relative order.
pub fn cull(mut population: Vec<Individual>, count: usize) -> Result<Vec<Individual>, EngineError> {
    check_evaluated(&population)?;
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| weakest_first(&population[a], &population[b]));
    let mut doomed = alloc::vec![false; population.len()];
    for &i in order.iter().take(count) {
        doomed[i] = true;
    }
    let mut idx = 0;
    population.retain(|_| {
        let keep = !doomed[idx];
        idx += 1;
        keep
    });
    Ok(population)
}

/// The `count` fittest individuals, fittest first, cut down to an even
/// number so they form complete consecutive pairs.
pub fn select_parents(population: &[Individual], count: usize) -> Result<Vec<Individual>, EngineError> {
    check_evaluated(population)?;
    let mut ranked: Vec<&Individual> = population.iter().collect();
    ranked.sort_by(|a, b| fittest_first(a, b));
    let mut n = count.min(ranked.len());
    n -= n % 2;
    Ok(ranked.into_iter().take(n).cloned().collect())
}

/// Uniform crossover: each gene index is swapped between the two children
/// with probability `p`. The first child starts as `a`, the second as `b`.
pub fn crossover(
    a: &Chromosome,
    b: &Chromosome,
    p: f64,
    rng: &mut RandomSource,
) -> Result<(Chromosome, Chromosome), EngineError> {
    if a.len() != b.len() {
        return Err(EngineError::SpaceMismatch(a.len(), b.len()));
    }
    let mut x = a.clone();
    let mut y = b.clone();
    for (gx, gy) in x.genes_mut().iter_mut().zip(y.genes_mut()) {
        if rng.chance(p) {
            core::mem::swap(gx, gy);
        }
    }
    Ok((x, y))
}

/// With probability `p`, resamples one uniformly chosen gene from its range.
/// Returns the index touched, if any; the new value may equal the old one.
pub fn mutate(c: &mut Chromosome, p: f64, space: &ParameterSpace, rng: &mut RandomSource) -> Option<usize> {
    if !rng.chance(p) || c.is_empty() {
        return None;
    }
    let i = rng.index(c.len());
    c.genes_mut()[i] = space.specs()[i].sample(rng);
    Some(i)
}
