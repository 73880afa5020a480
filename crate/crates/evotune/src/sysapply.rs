//! Snapshot, apply and restore of the system's network configuration.
//!
//! Every command goes through a [`CommandRunner`], so the whole module runs
//! against a stub in tests. Writes between individuals simply overwrite
//! each other (every gene is written every time); the snapshot is restored
//! once, when the session ends.

use std::time::{Duration, SystemTime, UNIX_EPOCH};

use evotune_core::paramspace::{render_gene_commands, Chromosome, ChromosomeError, CommandLine, ParameterSpace, RenderStyle, Target};
use serde::{Deserialize, Serialize};

use crate::runner::CommandRunner;

/// Environment variable that forces [`ApplyMode::DryRun`] when set to `1`.
pub const DRY_RUN_ENV: &str = "EVOTUNE_DRY_RUN";

/// Timeout for a single `sysctl` or `ip` invocation.
pub const COMMAND_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApplyMode {
    Live,
    /// Log the commands, execute nothing.
    DryRun,
}

/// True when `EVOTUNE_DRY_RUN=1`.
pub fn dry_run_forced() -> bool {
    std::env::var(DRY_RUN_ENV).is_ok_and(|v| v.trim() == "1")
}

impl ApplyMode {
    /// `requested`, unless the environment forces a dry run.
    pub fn resolve(requested: ApplyMode, forced_dry_run: bool) -> ApplyMode {
        if forced_dry_run {
            ApplyMode::DryRun
        } else {
            requested
        }
    }
}

/// Original values of every target a space writes, in space order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub entries: Vec<(Target, String)>,
}

impl Snapshot {
    /// The captured values as a chromosome of `space`. Values are not
    /// range-checked: untuned systems often sit outside the search ranges.
    pub fn to_chromosome(&self, space: &ParameterSpace) -> Result<Chromosome, ChromosomeError> {
        let text: Vec<&str> = self.entries.iter().map(|(_, v)| v.as_str()).collect();
        Chromosome::from_canonical(space, &text.join(","))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SysApplyError {
    #[error("cannot read {key}: {reason}")]
    ReadFailed { key: String, reason: String },
    #[error("no such interface {0}")]
    MissingInterface(String),
    #[error("live apply without a snapshot")]
    NoSnapshot,
    #[error(transparent)]
    Chromosome(#[from] ChromosomeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommandStatus {
    Applied,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub target: Target,
    pub command: CommandLine,
    pub status: CommandStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Overall {
    AllApplied,
    PartiallyApplied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplyOutcome {
    pub commands: Vec<CommandRecord>,
    pub overall: Overall,
    /// Snapshot writes issued after a failed apply, most recent first.
    pub rollback: Vec<CommandRecord>,
}

impl ApplyOutcome {
    fn from_records(commands: Vec<CommandRecord>, rollback: Vec<CommandRecord>) -> Self {
        let failed = commands.iter().any(|r| r.status != CommandStatus::Applied);
        let overall = if failed { Overall::PartiallyApplied } else { Overall::AllApplied };
        ApplyOutcome { commands, overall, rollback }
    }

    /// First failed command and its error text.
    pub fn first_failure(&self) -> Option<(&Target, &str)> {
        self.commands.iter().find_map(|r| match &r.status {
            CommandStatus::Failed(e) => Some((&r.target, e.as_str())),
            CommandStatus::Applied => None,
        })
    }
}

fn execute<R: CommandRunner>(runner: &mut R, target: &Target, command: CommandLine) -> CommandRecord {
    let status = match runner.run(&command.argv, COMMAND_TIMEOUT) {
        Ok(out) if out.success => CommandStatus::Applied,
        Ok(out) => CommandStatus::Failed(out.stderr.trim().to_string()),
        Err(e) => CommandStatus::Failed(e.to_string()),
    };
    if let CommandStatus::Failed(e) = &status {
        log::warn!("`{command}` failed: {e}");
    }
    CommandRecord { target: target.clone(), command, status }
}

fn run_read<R: CommandRunner>(runner: &mut R, argv: &[&str]) -> Result<String, String> {
    let argv: Vec<String> = argv.iter().map(|s| s.to_string()).collect();
    match runner.run(&argv, COMMAND_TIMEOUT) {
        Ok(out) if out.success => Ok(out.stdout),
        Ok(out) => Err(out.stderr.trim().to_string()),
        Err(e) => Err(e.to_string()),
    }
}

/// Value following `word` in `ip -o link` output.
fn link_field(text: &str, word: &str) -> Option<String> {
    let mut tokens = text.split_whitespace();
    while let Some(t) = tokens.next() {
        if t == word {
            // -o output joins lines with a backslash: "qlen 1000\    link/ether"
            let v = tokens.next()?.trim_end_matches('\\');
            return v.parse::<i64>().ok().map(|_| v.to_string());
        }
    }
    None
}

fn read_target<R: CommandRunner>(runner: &mut R, target: &Target) -> Result<String, SysApplyError> {
    match target {
        Target::Sysctl(key) => {
            let out = run_read(runner, &["sysctl", "-n", key])
                .map_err(|reason| SysApplyError::ReadFailed { key: key.clone(), reason })?;
            // multi-value keys come back tab separated
            let value = out.split_whitespace().collect::<Vec<_>>().join(" ");
            if value.is_empty() {
                return Err(SysApplyError::ReadFailed { key: key.clone(), reason: "empty value".into() });
            }
            Ok(value)
        }
        Target::InterfaceMtu(iface) | Target::InterfaceTxqueuelen(iface) => {
            let out = run_read(runner, &["ip", "-o", "link", "show", "dev", iface])
                .map_err(|_| SysApplyError::MissingInterface(iface.clone()))?;
            let word = if matches!(target, Target::InterfaceMtu(_)) { "mtu" } else { "qlen" };
            link_field(&out, word).ok_or_else(|| SysApplyError::ReadFailed {
                key: target.key(),
                reason: format!("no `{word}` in ip output"),
            })
        }
    }
}

/// Reads the current value of every target in `space`.
pub fn snapshot<R: CommandRunner>(space: &ParameterSpace, runner: &mut R) -> Result<Snapshot, SysApplyError> {
    let entries = space
        .iter()
        .map(|spec| Ok((spec.target().clone(), read_target(runner, spec.target())?)))
        .collect::<Result<Vec<_>, SysApplyError>>()?;
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Ok(Snapshot { timestamp, entries })
}

fn restore_entries<'a, R, I>(entries: I, runner: &mut R, style: RenderStyle) -> Vec<CommandRecord>
where
    R: CommandRunner,
    I: Iterator<Item = &'a (Target, String)>,
{
    entries.map(|(t, v)| execute(runner, t, t.write_command(v, style))).collect()
}

/// Writes `c` to the system.
///
/// In dry-run mode the commands are only logged. Live mode needs `snapshot`
/// and stops at the first failing command, writing the snapshot values back
/// over the entries already applied, newest first.
pub fn apply<R: CommandRunner>(
    space: &ParameterSpace,
    c: &Chromosome,
    mode: ApplyMode,
    snapshot: Option<&Snapshot>,
    runner: &mut R,
    style: RenderStyle,
) -> Result<ApplyOutcome, SysApplyError> {
    let commands = render_gene_commands(space, c, style)?;
    if mode == ApplyMode::DryRun {
        let records = space
            .iter()
            .zip(commands)
            .map(|(spec, command)| {
                log::info!("dry run: {command}");
                CommandRecord { target: spec.target().clone(), command, status: CommandStatus::Applied }
            })
            .collect();
        return Ok(ApplyOutcome::from_records(records, Vec::new()));
    }
    let snapshot = snapshot.ok_or(SysApplyError::NoSnapshot)?;
    let mut records = Vec::with_capacity(commands.len());
    for (spec, command) in space.iter().zip(commands) {
        let record = execute(runner, spec.target(), command);
        let failed = record.status != CommandStatus::Applied;
        records.push(record);
        if failed {
            let applied = records.len() - 1;
            let originals = snapshot.entries[..applied.min(snapshot.entries.len())].iter().rev();
            let rollback = restore_entries(originals, runner, style);
            return Ok(ApplyOutcome::from_records(records, rollback));
        }
    }
    Ok(ApplyOutcome::from_records(records, Vec::new()))
}

/// Writes every snapshot entry back, newest first, continuing past
/// failures.
pub fn restore<R: CommandRunner>(snapshot: &Snapshot, runner: &mut R, style: RenderStyle) -> ApplyOutcome {
    ApplyOutcome::from_records(restore_entries(snapshot.entries.iter().rev(), runner, style), Vec::new())
}

/// One tuning session on one machine: snapshot at start, any number of
/// applies, exactly one restore at the end (or on drop).
pub struct Session<R: CommandRunner> {
    runner: R,
    space: ParameterSpace,
    mode: ApplyMode,
    style: RenderStyle,
    snapshot: Option<Snapshot>,
    restored: bool,
}

impl<R: CommandRunner> Session<R> {
    /// Starts a session. Live mode snapshots immediately; dry-run mode
    /// touches nothing.
    pub fn begin(runner: R, space: &ParameterSpace, mode: ApplyMode, style: RenderStyle) -> Result<Self, SysApplyError> {
        let mut session = Session { runner, space: space.clone(), mode, style, snapshot: None, restored: false };
        if mode == ApplyMode::Live {
            let snap = snapshot(space, &mut session.runner)?;
            log::info!("snapshot of {} entries taken", snap.entries.len());
            session.snapshot = Some(snap);
        }
        Ok(session)
    }

    pub fn mode(&self) -> ApplyMode {
        self.mode
    }

    pub fn style(&self) -> RenderStyle {
        self.style
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn snapshot(&self) -> Option<&Snapshot> {
        self.snapshot.as_ref()
    }

    pub fn runner_mut(&mut self) -> &mut R {
        &mut self.runner
    }

    pub fn apply(&mut self, c: &Chromosome) -> Result<ApplyOutcome, SysApplyError> {
        apply(&self.space, c, self.mode, self.snapshot.as_ref(), &mut self.runner, self.style)
    }

    /// Restores the snapshot. Only the first call does anything; later
    /// calls, and dry-run sessions, return `None`.
    pub fn restore(&mut self) -> Option<ApplyOutcome> {
        if self.restored {
            return None;
        }
        self.restored = true;
        let snap = self.snapshot.as_ref()?;
        let outcome = restore(snap, &mut self.runner, self.style);
        match outcome.overall {
            Overall::AllApplied => log::info!("restored {} original values", snap.entries.len()),
            Overall::PartiallyApplied => log::error!("restore incomplete; check the system by hand"),
        }
        Some(outcome)
    }

    pub fn is_restored(&self) -> bool {
        self.restored
    }
}

impl<R: CommandRunner> Drop for Session<R> {
    fn drop(&mut self) {
        self.restore();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ip_link_fields() {
        let line = "2: eno2: <BROADCAST,MULTICAST,UP,LOWER_UP> mtu 1500 qdisc mq state UP mode DEFAULT group default qlen 1000\\    link/ether 00:11:22:33:44:55 brd ff:ff:ff:ff:ff:ff";
        assert_eq!(link_field(line, "mtu").as_deref(), Some("1500"));
        assert_eq!(link_field(line, "qlen").as_deref(), Some("1000"));
        assert_eq!(link_field("mtu x", "mtu"), None);
    }

    #[test]
    fn env_forces_dry_run() {
        assert_eq!(ApplyMode::resolve(ApplyMode::Live, true), ApplyMode::DryRun);
        assert_eq!(ApplyMode::resolve(ApplyMode::Live, false), ApplyMode::Live);
    }
}
