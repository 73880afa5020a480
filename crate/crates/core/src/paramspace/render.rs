//! Turning genes back into system commands.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{Chromosome, ChromosomeError, GeneValue, ParameterSpace, Target, ValueKind};

/// Which tool writes interface attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderStyle {
    /// `ip link set dev IF mtu N`
    #[default]
    IpLink,
    /// `ifconfig IF mtu N`
    LegacyIfconfig,
}

/// An argv vector, executed without a shell.
///
/// `Display` renders a copy-pasteable shell form: an argument holding
/// whitespace is quoted, after the `=` when it is a `KEY=VALUE` pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommandLine {
    pub argv: Vec<String>,
}

impl CommandLine {
    pub fn new<I, S>(args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        CommandLine { argv: args.into_iter().map(Into::into).collect() }
    }

    pub fn program(&self) -> &str {
        self.argv.first().map(String::as_str).unwrap_or("")
    }
}

impl fmt::Display for CommandLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, arg) in self.argv.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if arg.chars().any(char::is_whitespace) {
                match arg.split_once('=') {
                    Some((k, v)) => write!(f, "{k}=\"{v}\"")?,
                    None => write!(f, "\"{arg}\"")?,
                }
            } else {
                f.write_str(arg)?;
            }
        }
        Ok(())
    }
}

impl Target {
    /// Command writing `value` (already formatted) to this target.
    pub fn write_command(&self, value: &str, style: RenderStyle) -> CommandLine {
        match (self, style) {
            (Target::Sysctl(key), _) => CommandLine::new(["sysctl", "-w", &format!("{key}={value}")]),
            (Target::InterfaceMtu(i), RenderStyle::IpLink) => {
                CommandLine::new(["ip", "link", "set", "dev", i, "mtu", value])
            }
            (Target::InterfaceTxqueuelen(i), RenderStyle::IpLink) => {
                CommandLine::new(["ip", "link", "set", "dev", i, "txqueuelen", value])
            }
            (Target::InterfaceMtu(i), RenderStyle::LegacyIfconfig) => {
                CommandLine::new(["ifconfig", i, "mtu", value])
            }
            (Target::InterfaceTxqueuelen(i), RenderStyle::LegacyIfconfig) => {
                CommandLine::new(["ifconfig", i, "txqueuelen", value])
            }
        }
    }

    /// Recovers the target written by a rendered command line (either
    /// style), ignoring the value.
    pub fn from_command(line: &str) -> Option<Target> {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["sysctl", "-w", assign, ..] => {
                let key = assign.split_once('=')?.0;
                (!key.is_empty()).then(|| Target::Sysctl(key.to_string()))
            }
            ["ip", "link", "set", "dev", iface, "mtu", _] | ["ifconfig", iface, "mtu", _] => {
                Some(Target::InterfaceMtu(iface.to_string()))
            }
            ["ip", "link", "set", "dev", iface, "txqueuelen", _]
            | ["ifconfig", iface, "txqueuelen", _] => Some(Target::InterfaceTxqueuelen(iface.to_string())),
            _ => None,
        }
    }
}

/// One command per gene, in space order. Only the shape of `c` is checked,
/// so configurations read back from a running system (which may sit outside
/// the search ranges) can still be written.
pub fn render_gene_commands(
    space: &ParameterSpace,
    c: &Chromosome,
    style: RenderStyle,
) -> Result<Vec<CommandLine>, ChromosomeError> {
    c.check_shape(space)?;
    Ok(space
        .iter()
        .zip(c.genes())
        .map(|(spec, gene)| spec.target().write_command(&gene.to_string(), style))
        .collect())
}

/// One command per gene, in space order, for a chromosome fully inside the
/// space's ranges.
pub fn render_apply_commands(
    space: &ParameterSpace,
    c: &Chromosome,
    style: RenderStyle,
) -> Result<Vec<CommandLine>, ChromosomeError> {
    c.validate(space)?;
    render_gene_commands(space, c, style)
}

fn bound(v: &GeneValue) -> String {
    match v {
        GeneValue::Int(i) => i.to_string(),
        GeneValue::Triple(_) => format!("'{v}'"),
    }
}

pub(super) fn param_file(space: &ParameterSpace) -> String {
    let mut out = String::new();
    for spec in space {
        let prefix = match spec.target() {
            Target::Sysctl(k) => format!("sysctl -w {k}="),
            Target::InterfaceMtu(i) => format!("ifconfig {i} mtu "),
            Target::InterfaceTxqueuelen(i) => format!("ifconfig {i} txqueuelen "),
        };
        let (lo, hi) = match *spec.kind() {
            ValueKind::IntRange { min, max } => (GeneValue::Int(min), GeneValue::Int(max)),
            ValueKind::TripleRange { min, max } => (GeneValue::Triple(min), GeneValue::Triple(max)),
        };
        out.push_str(&prefix);
        for b in [lo, hi] {
            out.push(';');
            out.push_str(&bound(&b));
        }
        out.push('\n');
    }
    out
}
