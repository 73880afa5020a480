//! Parameter definitions and the genome encoding.
//!
//! A [`ParameterSpace`] is an ordered list of [`ParameterSpec`]s. Gene `i` of
//! a [`Chromosome`] always holds the value for `specs[i]`, so a chromosome is
//! one complete, applyable network configuration.

mod catalog;
mod parse;
mod render;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::rng::RandomSource;

pub use catalog::{builtin_catalog, catalog_text, CatalogError, CATALOG_NAMES};
pub use parse::{parse_param_file, ParseError};
pub use render::{render_apply_commands, render_gene_commands, CommandLine, RenderStyle};

/// Where a parameter is written on the system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "mechanism", content = "name", rename_all = "snake_case")]
pub enum Target {
    /// `sysctl -w KEY=VALUE`
    Sysctl(String),
    /// MTU of the named interface.
    InterfaceMtu(String),
    /// Transmit queue length of the named interface.
    InterfaceTxqueuelen(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    SysctlWrite,
    InterfaceMtu,
    InterfaceTxqueuelen,
}

impl Target {
    pub fn mechanism(&self) -> Mechanism {
        match self {
            Target::Sysctl(_) => Mechanism::SysctlWrite,
            Target::InterfaceMtu(_) => Mechanism::InterfaceMtu,
            Target::InterfaceTxqueuelen(_) => Mechanism::InterfaceTxqueuelen,
        }
    }

    /// Interface name for interface mechanisms, `None` for sysctl keys.
    pub fn interface(&self) -> Option<&str> {
        match self {
            Target::Sysctl(_) => None,
            Target::InterfaceMtu(i) | Target::InterfaceTxqueuelen(i) => Some(i),
        }
    }

    /// Unique name of the knob: the sysctl key, or `IFACE.mtu` /
    /// `IFACE.txqueuelen`.
    pub fn key(&self) -> String {
        match self {
            Target::Sysctl(k) => k.clone(),
            Target::InterfaceMtu(i) => format!("{i}.mtu"),
            Target::InterfaceTxqueuelen(i) => format!("{i}.txqueuelen"),
        }
    }

    fn name(&self) -> &str {
        match self {
            Target::Sysctl(n) | Target::InterfaceMtu(n) | Target::InterfaceTxqueuelen(n) => n,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Allowed values of one parameter. Bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    IntRange { min: i64, max: i64 },
    /// Three independently bounded components, written space-joined.
    TripleRange { min: [i64; 3], max: [i64; 3] },
}

impl ValueKind {
    fn is_ordered(&self) -> bool {
        match *self {
            ValueKind::IntRange { min, max } => min <= max,
            ValueKind::TripleRange { min, max } => (0..3).all(|i| min[i] <= max[i]),
        }
    }

    pub fn contains(&self, gene: &GeneValue) -> bool {
        match (*self, *gene) {
            (ValueKind::IntRange { min, max }, GeneValue::Int(v)) => (min..=max).contains(&v),
            (ValueKind::TripleRange { min, max }, GeneValue::Triple(v)) => {
                (0..3).all(|i| (min[i]..=max[i]).contains(&v[i]))
            }
            _ => false,
        }
    }

    fn matches_shape(&self, gene: &GeneValue) -> bool {
        matches!(
            (self, gene),
            (ValueKind::IntRange { .. }, GeneValue::Int(_))
                | (ValueKind::TripleRange { .. }, GeneValue::Triple(_))
        )
    }

    /// Position of `gene` inside the range, scaled to `[0, 1]`. Triples use
    /// the mean of their per-component positions. Degenerate ranges map to 0.
    pub fn normalize(&self, gene: &GeneValue) -> f64 {
        fn unit(v: i64, lo: i64, hi: i64) -> f64 {
            if hi <= lo {
                return 0.0;
            }
            let x = (v as f64 - lo as f64) / (hi as f64 - lo as f64);
            x.clamp(0.0, 1.0)
        }
        match (*self, *gene) {
            (ValueKind::IntRange { min, max }, GeneValue::Int(v)) => unit(v, min, max),
            (ValueKind::TripleRange { min, max }, GeneValue::Triple(v)) => {
                (0..3).map(|i| unit(v[i], min[i], max[i])).sum::<f64>() / 3.0
            }
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("empty parameter name")]
    EmptyName,
    #[error("parameter name {0:?} contains whitespace")]
    Whitespace(String),
    #[error("lower bound exceeds upper bound")]
    MinAboveMax,
    #[error("duplicate parameter {0}")]
    DuplicateKey(String),
    #[error("{0} takes a single integer, not a triple")]
    TripleOnInterface(String),
}

/// One tunable knob.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSpec {
    target: Target,
    kind: ValueKind,
}

impl ParameterSpec {
    pub fn new(target: Target, kind: ValueKind) -> Result<Self, SpecError> {
        let name = target.name();
        if name.is_empty() {
            return Err(SpecError::EmptyName);
        }
        if name.chars().any(char::is_whitespace) {
            return Err(SpecError::Whitespace(name.to_string()));
        }
        if !kind.is_ordered() {
            return Err(SpecError::MinAboveMax);
        }
        if target.interface().is_some() && matches!(kind, ValueKind::TripleRange { .. }) {
            return Err(SpecError::TripleOnInterface(target.key()));
        }
        Ok(ParameterSpec { target, kind })
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn kind(&self) -> &ValueKind {
        &self.kind
    }

    pub fn key(&self) -> String {
        self.target.key()
    }

    pub fn mechanism(&self) -> Mechanism {
        self.target.mechanism()
    }

    pub fn interface(&self) -> Option<&str> {
        self.target.interface()
    }

    /// The kernel rejects `tcp_mem`, `tcp_rmem` and `tcp_wmem` triples that
    /// are not ascending.
    fn wants_sorted_triple(&self) -> bool {
        match &self.target {
            Target::Sysctl(key) => matches!(
                key.rsplit('.').next(),
                Some("tcp_mem" | "tcp_rmem" | "tcp_wmem")
            ),
            _ => false,
        }
    }

    /// Draws a value uniformly from the range, independently per component.
    ///
    /// Triples for the kernel's ascending-only keys are sorted afterwards,
    /// but only when both bound triples are themselves ascending: in that
    /// case the k-th smallest draw always lies inside component k's range.
    pub fn sample(&self, rng: &mut RandomSource) -> GeneValue {
        match self.kind {
            ValueKind::IntRange { min, max } => GeneValue::Int(rng.int_inclusive(min, max)),
            ValueKind::TripleRange { min, max } => {
                let mut v = [0i64; 3];
                for (i, slot) in v.iter_mut().enumerate() {
                    *slot = rng.int_inclusive(min[i], max[i]);
                }
                let ascending = |t: [i64; 3]| t[0] <= t[1] && t[1] <= t[2];
                if self.wants_sorted_triple() && ascending(min) && ascending(max) {
                    v.sort_unstable();
                }
                GeneValue::Triple(v)
            }
        }
    }
}

/// Ordered set of parameters; gene index `i` always maps to `specs[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParameterSpec>", into = "Vec<ParameterSpec>")]
pub struct ParameterSpace {
    specs: Vec<ParameterSpec>,
}

impl ParameterSpace {
    pub fn new(specs: Vec<ParameterSpec>) -> Result<Self, SpecError> {
        for (i, spec) in specs.iter().enumerate() {
            if specs[..i].iter().any(|s| s.target == spec.target) {
                return Err(SpecError::DuplicateKey(spec.key()));
            }
        }
        Ok(ParameterSpace { specs })
    }

    pub fn specs(&self) -> &[ParameterSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, ParameterSpec> {
        self.specs.iter()
    }

    pub fn position(&self, key: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.key() == key)
    }

    /// The space in parameter-file grammar. Parsing this text yields an
    /// equal space.
    pub fn to_param_file(&self) -> String {
        render::param_file(self)
    }

    /// Hex SHA-256 of [`to_param_file`](Self::to_param_file).
    pub fn identity_hash(&self) -> String {
        let digest = Sha256::digest(self.to_param_file().as_bytes());
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}

impl TryFrom<Vec<ParameterSpec>> for ParameterSpace {
    type Error = SpecError;
    fn try_from(specs: Vec<ParameterSpec>) -> Result<Self, SpecError> {
        for s in &specs {
            ParameterSpec::new(s.target.clone(), s.kind)?;
        }
        ParameterSpace::new(specs)
    }
}

impl From<ParameterSpace> for Vec<ParameterSpec> {
    fn from(space: ParameterSpace) -> Self {
        space.specs
    }
}

impl<'a> IntoIterator for &'a ParameterSpace {
    type Item = &'a ParameterSpec;
    type IntoIter = core::slice::Iter<'a, ParameterSpec>;
    fn into_iter(self) -> Self::IntoIter {
        self.specs.iter()
    }
}

/// Concrete value of one gene. Serializes as a bare integer or a
/// three-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneValue {
    Int(i64),
    Triple([i64; 3]),
}

impl fmt::Display for GeneValue {
    /// Integers plainly, triples space-joined (`4096 87380 6291456`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneValue::Int(v) => write!(f, "{v}"),
            GeneValue::Triple([a, b, c]) => write!(f, "{a} {b} {c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChromosomeError {
    #[error("chromosome has {found} genes, space has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("gene {index} ({key}) has the wrong shape")]
    KindMismatch { index: usize, key: String },
    #[error("gene {index} ({key}) value {value} is out of range")]
    OutOfRange { index: usize, key: String, value: String },
    #[error("cannot parse gene {index}: {text:?}")]
    BadCanonical { index: usize, text: String },
}

/// One complete configuration: a gene per parameter, in space order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Chromosome {
    genes: Vec<GeneValue>,
}

impl Chromosome {
    pub fn new(genes: Vec<GeneValue>) -> Self {
        Chromosome { genes }
    }

    pub fn genes(&self) -> &[GeneValue] {
        &self.genes
    }

    pub fn genes_mut(&mut self) -> &mut [GeneValue] {
        &mut self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Every gene at its range's lower bound.
    pub fn lower_bounds(space: &ParameterSpace) -> Self {
        let genes = space
            .iter()
            .map(|s| match *s.kind() {
                ValueKind::IntRange { min, .. } => GeneValue::Int(min),
                ValueKind::TripleRange { min, .. } => GeneValue::Triple(min),
            })
            .collect();
        Chromosome { genes }
    }

    /// Length and per-gene kind agree with `space`; values are not
    /// range-checked.
    pub fn check_shape(&self, space: &ParameterSpace) -> Result<(), ChromosomeError> {
        if self.genes.len() != space.len() {
            return Err(ChromosomeError::LengthMismatch {
                expected: space.len(),
                found: self.genes.len(),
            });
        }
        for (index, (gene, spec)) in self.genes.iter().zip(space).enumerate() {
            if !spec.kind.matches_shape(gene) {
                return Err(ChromosomeError::KindMismatch { index, key: spec.key() });
            }
        }
        Ok(())
    }

    /// Shape check plus every gene inside its range.
    pub fn validate(&self, space: &ParameterSpace) -> Result<(), ChromosomeError> {
        self.check_shape(space)?;
        for (index, (gene, spec)) in self.genes.iter().zip(space).enumerate() {
            if !spec.kind.contains(gene) {
                return Err(ChromosomeError::OutOfRange {
                    index,
                    key: spec.key(),
                    value: gene.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Stable text key: genes in order, comma separated, triples
    /// space-joined. Used as the replay-cache key.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (i, g) in self.genes.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&g.to_string());
        }
        out
    }

    /// Inverse of [`canonical`](Self::canonical); gene shapes come from
    /// `space`. Values are not range-checked.
    pub fn from_canonical(space: &ParameterSpace, text: &str) -> Result<Self, ChromosomeError> {
        let parts: Vec<&str> = if text.trim().is_empty() {
            Vec::new()
        } else {
            text.split(',').collect()
        };
        if parts.len() != space.len() {
            return Err(ChromosomeError::LengthMismatch {
                expected: space.len(),
                found: parts.len(),
            });
        }
        let mut genes = Vec::with_capacity(parts.len());
        for (index, (part, spec)) in parts.iter().zip(space).enumerate() {
            let bad = || ChromosomeError::BadCanonical { index, text: part.to_string() };
            let gene = match spec.kind {
                ValueKind::IntRange { .. } => GeneValue::Int(part.trim().parse().map_err(|_| bad())?),
                ValueKind::TripleRange { .. } => {
                    let nums: Vec<i64> = part
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad())?;
                    let arr: [i64; 3] = nums.try_into().map_err(|_| bad())?;
                    GeneValue::Triple(arr)
                }
            };
            genes.push(gene);
        }
        Ok(Chromosome { genes })
    }
}

/// Draws one chromosome, each gene uniformly from its range.
pub fn sample_chromosome(space: &ParameterSpace, rng: &mut RandomSource) -> Chromosome {
    Chromosome {
        genes: space.iter().map(|s| s.sample(rng)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn flag(key: &str) -> ParameterSpec {
        ParameterSpec::new(Target::Sysctl(key.into()), ValueKind::IntRange { min: 0, max: 1 }).unwrap()
    }

    #[test]
    fn spec_invariants() {
        assert_eq!(
            ParameterSpec::new(Target::Sysctl("".into()), ValueKind::IntRange { min: 0, max: 1 }),
            Err(SpecError::EmptyName)
        );
        assert!(matches!(
            ParameterSpec::new(Target::Sysctl("a b".into()), ValueKind::IntRange { min: 0, max: 1 }),
            Err(SpecError::Whitespace(_))
        ));
        assert_eq!(
            ParameterSpec::new(Target::Sysctl("x".into()), ValueKind::IntRange { min: 5, max: 3 }),
            Err(SpecError::MinAboveMax)
        );
        assert_eq!(
            ParameterSpec::new(
                Target::Sysctl("x".into()),
                ValueKind::TripleRange { min: [1, 9, 1], max: [2, 8, 2] }
            ),
            Err(SpecError::MinAboveMax)
        );
        let s = ParameterSpec::new(Target::InterfaceMtu("eno2".into()), ValueKind::IntRange { min: 1500, max: 2700 })
            .unwrap();
        assert_eq!(s.interface(), Some("eno2"));
        assert_eq!(s.mechanism(), Mechanism::InterfaceMtu);
        assert_eq!(flag("net.ipv4.tcp_sack").interface(), None);
    }

    #[test]
    fn duplicate_keys_rejected() {
        assert!(matches!(
            ParameterSpace::new(vec![flag("a"), flag("b"), flag("a")]),
            Err(SpecError::DuplicateKey(k)) if k == "a"
        ));
    }

    #[test]
    fn degenerate_int_range_always_same() {
        let space = ParameterSpace::new(vec![ParameterSpec::new(
            Target::Sysctl("k".into()),
            ValueKind::IntRange { min: 7, max: 7 },
        )
        .unwrap()])
        .unwrap();
        let mut rng = RandomSource::from_seed(9);
        for _ in 0..100 {
            assert_eq!(sample_chromosome(&space, &mut rng).genes(), &[GeneValue::Int(7)]);
        }
    }

    #[test]
    fn binary_flag_is_fair() {
        let space = ParameterSpace::new(vec![flag("f")]).unwrap();
        let mut rng = RandomSource::from_seed(2024);
        let ones = (0..10_000)
            .filter(|_| sample_chromosome(&space, &mut rng).genes()[0] == GeneValue::Int(1))
            .count();
        let frac = ones as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&frac), "fraction of ones {frac}");
    }

    #[test]
    fn kernel_triples_are_sorted_and_in_range() {
        let space = builtin_catalog("listing1-14").unwrap();
        let mut rng = RandomSource::from_seed(5);
        for _ in 0..2000 {
            let c = sample_chromosome(&space, &mut rng);
            c.validate(&space).unwrap();
            let GeneValue::Triple(m) = c.genes()[0] else { panic!() };
            assert!(m[0] <= m[1] && m[1] <= m[2], "{m:?}");
        }
    }

    #[test]
    fn unsorted_when_bounds_not_ascending() {
        let spec = ParameterSpec::new(
            Target::Sysctl("net.ipv4.tcp_mem".into()),
            ValueKind::TripleRange { min: [50, 0, 0], max: [60, 10, 10] },
        )
        .unwrap();
        let mut rng = RandomSource::from_seed(1);
        for _ in 0..200 {
            assert!(spec.kind().contains(&spec.sample(&mut rng)));
        }
    }

    #[test]
    fn validate_reports_gene() {
        let space = builtin_catalog("listing1-14").unwrap();
        let mut c = Chromosome::lower_bounds(&space);
        c.validate(&space).unwrap();
        c.genes_mut()[13] = GeneValue::Int(9000);
        assert!(matches!(
            c.validate(&space),
            Err(ChromosomeError::OutOfRange { index: 13, .. })
        ));
        c.check_shape(&space).unwrap();
        c.genes_mut()[0] = GeneValue::Int(1);
        assert!(matches!(c.check_shape(&space), Err(ChromosomeError::KindMismatch { index: 0, .. })));
        let short = Chromosome::new(vec![GeneValue::Int(1)]);
        assert!(matches!(short.validate(&space), Err(ChromosomeError::LengthMismatch { expected: 14, found: 1 })));
    }

    #[test]
    fn canonical_round_trip() {
        let space = builtin_catalog("listing1-14").unwrap();
        let c = sample_chromosome(&space, &mut RandomSource::from_seed(77));
        let text = c.canonical();
        assert_eq!(Chromosome::from_canonical(&space, &text).unwrap(), c);
        assert!(Chromosome::from_canonical(&space, "1,2").is_err());
    }

    #[test]
    fn normalize_triple_is_mean() {
        let k = ValueKind::TripleRange { min: [0, 0, 0], max: [10, 10, 10] };
        assert_eq!(k.normalize(&GeneValue::Triple([0, 5, 10])), 0.5);
        assert_eq!(ValueKind::IntRange { min: 3, max: 3 }.normalize(&GeneValue::Int(3)), 0.0);
    }

    #[test]
    fn gene_json_shape() {
        let c = Chromosome::new(vec![GeneValue::Int(1), GeneValue::Triple([1, 2, 3])]);
        let j = serde_json::to_string(&c).unwrap();
        assert_eq!(j, "[1,[1,2,3]]");
        assert_eq!(serde_json::from_str::<Chromosome>(&j).unwrap(), c);
    }
}
