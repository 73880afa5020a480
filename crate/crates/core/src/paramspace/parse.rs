//! Parameter-file grammar.
//!
//! One parameter per line: `<apply-command-prefix>;<min>;<max>`.
//!
//! ```text
//! sysctl -w net.ipv4.tcp_sack=;0;1
//! sysctl -w net.ipv4.tcp_rmem=;'4096 87380 6291456';'8192 873800 16777216'
//! ifconfig eno2 mtu ;1500;2700
//! ifconfig eno2 txqueuelen ;1000;10000
//! ```
//!
//! Blank lines and lines whose first non-blank character is `#` are skipped.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{ParameterSpace, ParameterSpec, SpecError, Target, ValueKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::MalformedLine { line, .. } => *line,
        }
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> ParseError {
    ParseError::MalformedLine { line, reason: reason.into() }
}

enum Bound {
    Int(i64),
    Triple([i64; 3]),
}

fn parse_bound(field: &str) -> Result<Bound, String> {
    let field = field.trim();
    if let Some(rest) = field.strip_prefix('\'') {
        let inner = rest
            .strip_suffix('\'')
            .ok_or_else(|| "unterminated quoted bound".to_string())?;
        let nums = inner
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|_| alloc::format!("non-integer bound {t:?}")))
            .collect::<Result<Vec<_>, _>>()?;
        let triple: [i64; 3] = nums
            .try_into()
            .map_err(|v: Vec<i64>| alloc::format!("quoted bound has {} numbers, expected 3", v.len()))?;
        Ok(Bound::Triple(triple))
    } else {
        field
            .parse::<i64>()
            .map(Bound::Int)
            .map_err(|_| alloc::format!("non-integer bound {field:?}"))
    }
}

fn parse_target(prefix: &str) -> Result<Target, String> {
    let tokens: Vec<&str> = prefix.split_whitespace().collect();
    match tokens.as_slice() {
        ["sysctl", "-w", assign] => match assign.strip_suffix('=') {
            Some(key) if !key.is_empty() && !key.contains('=') => Ok(Target::Sysctl(key.to_string())),
            _ => Err(alloc::format!("expected `sysctl -w KEY=`, found {prefix:?}")),
        },
        ["ifconfig", iface, "mtu"] => Ok(Target::InterfaceMtu(iface.to_string())),
        ["ifconfig", iface, "txqueuelen"] => Ok(Target::InterfaceTxqueuelen(iface.to_string())),
        _ => Err(alloc::format!("unrecognized apply command {:?}", prefix.trim())),
    }
}

/// Parses a parameter file. Any error aborts the whole parse; no partial
/// space is ever returned.
pub fn parse_param_file(text: &str) -> Result<ParameterSpace, ParseError> {
    let mut specs: Vec<ParameterSpec> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(';').collect();
        if fields.len() != 3 {
            return Err(malformed(
                line_no,
                alloc::format!("expected 3 `;`-separated fields, found {}", fields.len()),
            ));
        }
        let target = parse_target(fields[0]).map_err(|r| malformed(line_no, r))?;
        let min = parse_bound(fields[1]).map_err(|r| malformed(line_no, r))?;
        let max = parse_bound(fields[2]).map_err(|r| malformed(line_no, r))?;
        let kind = match (min, max) {
            (Bound::Int(min), Bound::Int(max)) => ValueKind::IntRange { min, max },
            (Bound::Triple(min), Bound::Triple(max)) => ValueKind::TripleRange { min, max },
            _ => return Err(malformed(line_no, "mixed triple and scalar bounds")),
        };
        let spec = ParameterSpec::new(target, kind).map_err(|e| match e {
            SpecError::MinAboveMax => malformed(line_no, "min > max"),
            other => malformed(line_no, other.to_string()),
        })?;
        if specs.iter().any(|s| s.target == spec.target) {
            return Err(malformed(line_no, alloc::format!("duplicate key {}", spec.key())));
        }
        specs.push(spec);
    }
    ParameterSpace::new(specs).map_err(|e| malformed(0, e.to_string()))
}
