#![allow(dead_code)]

use std::cell::Cell;
use std::rc::Rc;

use evotune_core::fitness::{Capabilities, FitnessEvaluator, SimModel, SimulatedEvaluator, Throughput};
use evotune_core::fixtures;
use evotune_core::paramspace::{builtin_catalog, parse_param_file, Chromosome, GeneValue, ParameterSpace};

pub fn toy16() -> (ParameterSpace, SimModel) {
    let space = parse_param_file(fixtures::TOY16_PARAMS).unwrap();
    let model: SimModel = serde_json::from_str(fixtures::TOY16_MODEL).unwrap();
    (space, model)
}

pub fn toy_cal() -> (ParameterSpace, SimModel) {
    let space = builtin_catalog("listing1-14").unwrap();
    let model: SimModel = serde_json::from_str(fixtures::TOY_CAL_MODEL).unwrap();
    (space, model)
}

/// toy16 written out by hand, independent of the model evaluator.
pub fn toy16_by_hand(bits: [i64; 4]) -> f64 {
    let f = |b: i64, on: f64| if b == 1 { on } else { 1.0 };
    100.0 * f(bits[0], 1.5) * f(bits[1], 0.8) * f(bits[2], 1.3) * f(bits[3], 1.2)
        + 60.0 * (bits[1] * bits[3]) as f64
}

/// Exhaustive search over all 16 toy16 chromosomes.
pub fn toy16_brute_force() -> (Chromosome, f64) {
    let mut best: Option<([i64; 4], f64)> = None;
    for n in 0..16i64 {
        let bits = [n >> 3 & 1, n >> 2 & 1, n >> 1 & 1, n & 1];
        let v = toy16_by_hand(bits);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((bits, v));
        }
    }
    let (bits, v) = best.unwrap();
    (Chromosome::new(bits.iter().map(|&b| GeneValue::Int(b)).collect()), v)
}

/// Frozen result of [`toy16_brute_force`].
pub const TOY16_OPTIMUM: [i64; 4] = [1, 1, 1, 1];
pub const TOY16_OPTIMUM_VALUE: f64 = 247.2;

/// Wraps an evaluator and counts calls through a shared cell.
pub struct Counting<E> {
    pub inner: E,
    pub calls: Rc<Cell<u64>>,
}

impl<E> Counting<E> {
    pub fn new(inner: E) -> (Self, Rc<Cell<u64>>) {
        let calls = Rc::new(Cell::new(0));
        (Counting { inner, calls: calls.clone() }, calls)
    }
}

impl<E: FitnessEvaluator> FitnessEvaluator for Counting<E> {
    type Error = E::Error;
    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }
    fn evaluate(&mut self, c: &Chromosome) -> Result<Throughput, E::Error> {
        self.calls.set(self.calls.get() + 1);
        self.inner.evaluate(c)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("injected failure")]
pub struct Injected;

/// Fails on the `fail_at`-th call (1-based), otherwise scores gene sums.
pub struct FailAt {
    pub fail_at: u64,
    pub calls: u64,
}

impl FitnessEvaluator for FailAt {
    type Error = Injected;
    fn capabilities(&self) -> Capabilities {
        Capabilities { deterministic: true, safe_for_parallel: false }
    }
    fn evaluate(&mut self, c: &Chromosome) -> Result<Throughput, Injected> {
        self.calls += 1;
        if self.calls == self.fail_at {
            return Err(Injected);
        }
        let s: i64 = c.genes().iter().map(|g| if let GeneValue::Int(v) = g { *v } else { 0 }).sum();
        Ok(Throughput::from_mbps(s.max(0) as f64).unwrap())
    }
}

pub fn sim(space: &ParameterSpace, model: SimModel) -> SimulatedEvaluator {
    SimulatedEvaluator::new(space, model, 0).unwrap()
}
