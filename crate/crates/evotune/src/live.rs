//! Fitness from a real benchmark run against the tuned machine.

use std::fmt;
use std::io;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use evotune_core::fitness::{
    parse_latency_hping, parse_throughput_iperf, parse_throughput_netperf, Capabilities, ConstantZero,
    FitnessEvaluator, LatencyReport, Throughput, UnparseableOutput,
};
use evotune_core::paramspace::{Chromosome, Target};
use serde::{Deserialize, Serialize};

use crate::runner::{CommandRunner, RunnerError};
use crate::sysapply::{ApplyMode, Session, SysApplyError};

pub const DEFAULT_BENCHMARK: &str = "netperf -H {host} -p {port} -l {duration} -t TCP_STREAM";
pub const DEFAULT_PORT: u16 = 12865;
pub const DEFAULT_DURATION_SECS: u64 = 10;
pub const DEFAULT_GRACE_SECS: u64 = 15;

/// How to read the benchmark's stdout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Netperf,
    Iperf,
}

impl OutputFormat {
    pub fn parse(self, stdout: &str) -> Result<Throughput, UnparseableOutput> {
        match self {
            OutputFormat::Netperf => parse_throughput_netperf(stdout),
            OutputFormat::Iperf => parse_throughput_iperf(stdout),
        }
    }
}

/// A whitespace-separated argv template. `{host}`, `{port}` and
/// `{duration}` are substituted inside any argument; there is no shell and
/// no quoting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandTemplate(Vec<String>);

impl CommandTemplate {
    pub fn parse(text: &str) -> Option<Self> {
        let argv: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        (!argv.is_empty()).then_some(CommandTemplate(argv))
    }

    pub fn render(&self, host: &str, port: u16, duration_secs: u64) -> Vec<String> {
        self.0
            .iter()
            .map(|a| {
                a.replace("{host}", host)
                    .replace("{port}", &port.to_string())
                    .replace("{duration}", &duration_secs.to_string())
            })
            .collect()
    }
}

impl fmt::Display for CommandTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub template: CommandTemplate,
    pub host: String,
    pub port: u16,
    pub duration_secs: u64,
    pub grace_secs: u64,
    pub format: OutputFormat,
}

impl BenchmarkConfig {
    pub fn new(host: impl Into<String>) -> Self {
        BenchmarkConfig {
            template: CommandTemplate::parse(DEFAULT_BENCHMARK).expect("non-empty"),
            host: host.into(),
            port: DEFAULT_PORT,
            duration_secs: DEFAULT_DURATION_SECS,
            grace_secs: DEFAULT_GRACE_SECS,
            format: OutputFormat::Netperf,
        }
    }

    pub fn argv(&self) -> Vec<String> {
        self.template.render(&self.host, self.port, self.duration_secs)
    }

    /// Wall-clock limit: duration plus grace.
    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.duration_secs + self.grace_secs)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LiveError {
    #[error("applying {key} failed: {stderr}")]
    ApplyFailed { key: String, stderr: String },
    #[error("benchmark did not finish within {0:?}")]
    BenchmarkTimeout(Duration),
    #[error("benchmark failed: {0}")]
    BenchmarkFailed(String),
    #[error(transparent)]
    UnparseableOutput(#[from] UnparseableOutput),
    #[error("aborted by signal")]
    Aborted,
    #[error(transparent)]
    Sys(#[from] SysApplyError),
}

fn from_runner(e: RunnerError, timeout: Duration) -> LiveError {
    match e {
        RunnerError::Timeout { .. } => LiveError::BenchmarkTimeout(timeout),
        RunnerError::Interrupted { .. } => LiveError::Aborted,
        RunnerError::Spawn { .. } => LiveError::BenchmarkFailed(e.to_string()),
    }
}

/// Applies each chromosome through a [`Session`] and measures it with the
/// configured benchmark. In a dry-run session nothing is executed and every
/// chromosome scores zero.
pub struct LiveEvaluator<R: CommandRunner> {
    session: Session<R>,
    bench: BenchmarkConfig,
    abort: Arc<AtomicBool>,
}

impl<R: CommandRunner> LiveEvaluator<R> {
    pub fn new(session: Session<R>, bench: BenchmarkConfig, abort: Arc<AtomicBool>) -> Self {
        if session.mode() == ApplyMode::DryRun {
            log::warn!("dry run: commands are only logged and every fitness is 0");
        }
        LiveEvaluator { session, bench, abort }
    }

    pub fn session(&self) -> &Session<R> {
        &self.session
    }

    pub fn session_mut(&mut self) -> &mut Session<R> {
        &mut self.session
    }

    pub fn into_session(self) -> Session<R> {
        self.session
    }

    fn check_abort(&self) -> Result<(), LiveError> {
        if self.abort.load(Ordering::SeqCst) {
            Err(LiveError::Aborted)
        } else {
            Ok(())
        }
    }

    fn apply(&mut self, c: &Chromosome) -> Result<(), LiveError> {
        let outcome = self.session.apply(c)?;
        match outcome.first_failure() {
            Some((target, stderr)) => Err(LiveError::ApplyFailed { key: Target::key(target), stderr: stderr.to_string() }),
            None => Ok(()),
        }
    }

    /// Applies `c`, then runs `template` once and parses its round-trip
    /// summary. `None` in a dry-run session.
    pub fn latency(&mut self, c: &Chromosome, template: &CommandTemplate) -> Result<Option<LatencyReport>, LiveError> {
        self.check_abort()?;
        self.apply(c)?;
        let argv = template.render(&self.bench.host, self.bench.port, self.bench.duration_secs);
        if self.session.mode() == ApplyMode::DryRun {
            log::info!("dry run: {}", argv.join(" "));
            return Ok(None);
        }
        let timeout = self.bench.timeout();
        let out = self.session.runner_mut().run(&argv, timeout).map_err(|e| from_runner(e, timeout))?;
        Ok(Some(parse_latency_hping(&out.stdout)?))
    }
}

impl<R: CommandRunner> FitnessEvaluator for LiveEvaluator<R> {
    type Error = LiveError;

    fn capabilities(&self) -> Capabilities {
        Capabilities { deterministic: false, safe_for_parallel: false }
    }

    fn evaluate(&mut self, c: &Chromosome) -> Result<Throughput, LiveError> {
        self.check_abort()?;
        self.apply(c)?;
        let argv = self.bench.argv();
        if self.session.mode() == ApplyMode::DryRun {
            log::info!("dry run: {}", argv.join(" "));
            return Ok(ConstantZero.evaluate(c).unwrap_or(Throughput::ZERO));
        }
        let timeout = self.bench.timeout();
        let out = self.session.runner_mut().run(&argv, timeout).map_err(|e| from_runner(e, timeout))?;
        self.check_abort()?;
        if !out.success {
            let msg = if out.stderr.trim().is_empty() { &out.stdout } else { &out.stderr };
            return Err(LiveError::BenchmarkFailed(msg.trim().chars().take(200).collect()));
        }
        let t = self.bench.format.parse(&out.stdout)?;
        log::info!("{} -> {:.2} Mbit/s", c.canonical(), t.mbps());
        Ok(t)
    }
}

/// Sets the returned flag on SIGINT, SIGTERM or SIGHUP. A second signal
/// while the flag is set terminates the process immediately.
pub fn install_abort_handler() -> io::Result<Arc<AtomicBool>> {
    use signal_hook::consts::{SIGHUP, SIGINT, SIGTERM};
    let flag = Arc::new(AtomicBool::new(false));
    for sig in [SIGINT, SIGTERM, SIGHUP] {
        signal_hook::flag::register_conditional_shutdown(sig, 130, Arc::clone(&flag))?;
        signal_hook::flag::register(sig, Arc::clone(&flag))?;
    }
    Ok(flag)
}
