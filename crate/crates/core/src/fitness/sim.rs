//! Deterministic stand-in for a network testbed.
//!
//! ```text
//! throughput = clamp(base * Π curve_i(x_i) + Σ weight_ab * x_a * x_b + noise, 0, cap)
//! ```
//!
//! `x_i` is gene `i`'s position inside its range scaled to `[0, 1]` (the
//! mean over components for triples). Each curve is piecewise linear over
//! `x`. `noise` is Gaussian with `noise_stddev`; at zero the model is a pure
//! function of the chromosome.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Capabilities, FitnessEvaluator, Throughput};
use crate::paramspace::{Chromosome, ParameterSpace};
use crate::rng::RandomSource;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("model does not match parameter space: {0}")]
    ModelMismatch(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Piecewise-linear response over `[0, 1]`, as `(x, factor)` points with
/// ascending `x`. Outside the first/last point the end value holds. No
/// points means a constant factor of 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curve(pub Vec<(f64, f64)>);

impl Curve {
    pub fn neutral() -> Self {
        Curve(Vec::new())
    }

    pub fn linear(at0: f64, at1: f64) -> Self {
        Curve(alloc::vec![(0.0, at0), (1.0, at1)])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.0;
        let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
            return 1.0;
        };
        if x <= first.0 {
            return first.1;
        }
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x <= x1 {
                if x1 <= x0 {
                    return y1;
                }
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        last.1
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    fn check(&self) -> Result<(), String> {
        for &(x, y) in &self.0 {
            if !(x.is_finite() && y.is_finite()) {
                return Err("non-finite curve point".into());
            }
            if !(0.0..=1.0).contains(&x) {
                return Err(format!("curve x {x} outside [0, 1]"));
            }
            if y < 0.0 {
                return Err(format!("negative curve factor {y}"));
            }
        }
        if self.0.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err("curve x values must ascend".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneResponse {
    /// Parameter key this response belongs to; must match the space.
    pub key: String,
    #[serde(default)]
    pub curve: Curve,
    /// Declares that raising this gene never lowers the output. Checked
    /// when the model is bound to a space.
    #[serde(default)]
    pub monotone: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

/// Additive term `weight * x_a * x_b`, in Mbit/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

fn one() -> u32 {
    1
}

/// Model parameters, normally loaded from a versioned fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimModel {
    #[serde(default = "one")]
    pub version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Mbit/s when every factor is 1.
    pub base: f64,
    /// Link capacity, Mbit/s.
    pub cap: f64,
    #[serde(default)]
    pub noise_stddev: f64,
    pub genes: Vec<GeneResponse>,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
    /// The system's untuned configuration, used as the comparison baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Chromosome>,
}

impl SimModel {
    /// All curves neutral: every chromosome scores `min(base, cap)`.
    pub fn neutral(space: &ParameterSpace, base: f64, cap: f64) -> Self {
        SimModel {
            version: 1,
            name: String::from("neutral"),
            description: String::new(),
            base,
            cap,
            noise_stddev: 0.0,
            genes: space
                .iter()
                .map(|s| GeneResponse { key: s.key(), curve: Curve::neutral(), monotone: true, note: String::new() })
                .collect(),
            interactions: Vec::new(),
            default: None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.noise_stddev == 0.0
    }

    /// Checks the model against `space` and its own internal constraints.
    pub fn validate(&self, space: &ParameterSpace) -> Result<(), ModelError> {
        let invalid = |m: String| Err(ModelError::Invalid(m));
        if self.genes.len() != space.len() {
            return Err(ModelError::ModelMismatch(format!(
                "model has {} genes, space has {}",
                self.genes.len(),
                space.len()
            )));
        }
        for (i, (g, spec)) in self.genes.iter().zip(space).enumerate() {
            if g.key != spec.key() {
                return Err(ModelError::ModelMismatch(format!(
                    "gene {i} is {:?} in the model but {:?} in the space",
                    g.key,
                    spec.key()
                )));
            }
            g.curve.check().or_else(|m| invalid(format!("gene {i} ({}): {m}", g.key)))?;
        }
        if !(self.base.is_finite() && self.base >= 0.0) {
            return invalid(format!("base {} must be finite and non-negative", self.base));
        }
        if !(self.cap.is_finite() && self.cap >= 0.0) {
            return invalid(format!("cap {} must be finite and non-negative", self.cap));
        }
        if !(self.noise_stddev.is_finite() && self.noise_stddev >= 0.0) {
            return invalid(format!("noise_stddev {} must be finite and non-negative", self.noise_stddev));
        }
        for t in &self.interactions {
            if t.a >= space.len() || t.b >= space.len() {
                return invalid(format!("interaction ({}, {}) out of range", t.a, t.b));
            }
            if !t.weight.is_finite() {
                return invalid(format!("interaction ({}, {}) weight is not finite", t.a, t.b));
            }
        }
        for (i, g) in self.genes.iter().enumerate().filter(|(_, g)| g.monotone) {
            if !g.curve.is_non_decreasing() {
                return invalid(format!("gene {i} ({}) is marked monotone but its curve decreases", g.key));
            }
            if self.interactions.iter().any(|t| (t.a == i || t.b == i) && t.weight < 0.0) {
                return invalid(format!("gene {i} ({}) is marked monotone but has a negative interaction", g.key));
            }
        }
        if let Some(d) = &self.default {
            d.check_shape(space)
                .map_err(|e| ModelError::ModelMismatch(format!("default chromosome: {e}")))?;
        }
        Ok(())
    }

    /// Noise-free score, before clamping.
    fn raw(&self, space: &ParameterSpace, c: &Chromosome) -> f64 {
        let xs: Vec<f64> = space.iter().zip(c.genes()).map(|(s, g)| s.kind().normalize(g)).collect();
        let product: f64 = self.genes.iter().zip(&xs).map(|(g, &x)| g.curve.eval(x)).product();
        let pairs: f64 = self.interactions.iter().map(|t| t.weight * xs[t.a] * xs[t.b]).sum();
        self.base * product + pairs
    }
}

/// One simulated measurement of `c`.
///
/// `model` must already have been validated against `space`.
pub fn evaluate_simulated(
    space: &ParameterSpace,
    c: &Chromosome,
    model: &SimModel,
    rng: &mut RandomSource,
) -> Result<Throughput, ModelError> {
    c.check_shape(space).map_err(|e| ModelError::ModelMismatch(format!("{e}")))?;
    let noisy = model.raw(space, c) + rng.normal(0.0, model.noise_stddev);
    let clamped = noisy.clamp(0.0, model.cap);
    Throughput::from_mbps(clamped).map_err(|e| ModelError::Invalid(format!("{e}")))
}

/// [`SimModel`] bound to a space, with its own noise stream.
#[derive(Debug, Clone)]
pub struct SimulatedEvaluator {
    space: ParameterSpace,
    model: SimModel,
    noise: RandomSource,
}

impl SimulatedEvaluator {
    pub fn new(space: &ParameterSpace, model: SimModel, noise_seed: u64) -> Result<Self, ModelError> {
        model.validate(space)?;
        Ok(SimulatedEvaluator { space: space.clone(), model, noise: RandomSource::from_seed(noise_seed) })
    }

    pub fn model(&self) -> &SimModel {
        &self.model
    }
}

impl FitnessEvaluator for SimulatedEvaluator {
    type Error = ModelError;

    fn capabilities(&self) -> Capabilities {
        let det = self.model.is_deterministic();
        Capabilities { deterministic: det, safe_for_parallel: det }
    }

    fn evaluate(&mut self, chromosome: &Chromosome) -> Result<Throughput, ModelError> {
        evaluate_simulated(&self.space, chromosome, &self.model, &mut self.noise)
    }
}
