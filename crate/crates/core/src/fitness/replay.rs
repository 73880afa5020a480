//! Replay cache: exact-match lookup of previously measured chromosomes.

use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::{Capabilities, FitnessEvaluator, Throughput};
use crate::paramspace::Chromosome;

/// Map from [`Chromosome::canonical`] to Mbit/s. Serializes as a flat JSON
/// object, keys sorted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReplayCache {
    entries: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no cached measurement for chromosome {0}")]
pub struct CacheMiss(pub String);

impl ReplayCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, c: &Chromosome, t: Throughput) {
        self.entries.insert(c.canonical(), t.mbps());
    }

    pub fn get(&self, c: &Chromosome) -> Result<Throughput, CacheMiss> {
        let key = c.canonical();
        self.entries
            .get(&key)
            .and_then(|&v| Throughput::from_mbps(v).ok())
            .ok_or(CacheMiss(key))
    }
}

/// Answers only from the cache; a miss is an error, never an estimate.
#[derive(Debug, Clone)]
pub struct ReplayEvaluator {
    cache: ReplayCache,
}

impl ReplayEvaluator {
    pub fn new(cache: ReplayCache) -> Self {
        ReplayEvaluator { cache }
    }
}

impl FitnessEvaluator for ReplayEvaluator {
    type Error = CacheMiss;

    fn capabilities(&self) -> Capabilities {
        Capabilities { deterministic: true, safe_for_parallel: true }
    }

    fn evaluate(&mut self, chromosome: &Chromosome) -> Result<Throughput, CacheMiss> {
        self.cache.get(chromosome)
    }
}

/// Passes evaluations through to `inner` and records every result. A
/// repeated chromosome keeps its latest measurement.
#[derive(Debug, Clone)]
pub struct Recording<E> {
    inner: E,
    cache: ReplayCache,
}

impl<E> Recording<E> {
    pub fn new(inner: E) -> Self {
        Recording { inner, cache: ReplayCache::new() }
    }

    pub fn cache(&self) -> &ReplayCache {
        &self.cache
    }

    pub fn into_parts(self) -> (E, ReplayCache) {
        (self.inner, self.cache)
    }
}

impl<E: FitnessEvaluator> FitnessEvaluator for Recording<E> {
    type Error = E::Error;

    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    fn evaluate(&mut self, chromosome: &Chromosome) -> Result<Throughput, E::Error> {
        let t = self.inner.evaluate(chromosome)?;
        self.cache.insert(chromosome, t);
        Ok(t)
    }
}
