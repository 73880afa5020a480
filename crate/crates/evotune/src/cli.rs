//! Command-line interface.
//!
//! [`execute`] is generic over the command runner and the output stream so
//! the whole CLI can be driven in-process against a stub system.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use anyhow::{anyhow, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};
use evotune_core::engine::{self, GaConfig, RunError, RunReport};
use evotune_core::fitness::{FitnessEvaluator, Recording, ReplayEvaluator, SimModel, SimulatedEvaluator};
use evotune_core::paramspace::{
    render_apply_commands, render_gene_commands, sample_chromosome, Chromosome, ParameterSpace, RenderStyle,
    ValueKind,
};
use evotune_core::RandomSource;

use crate::files::{self, SpaceSource};
use crate::live::{self, BenchmarkConfig, CommandTemplate, LiveEvaluator, OutputFormat};
use crate::runner::CommandRunner;
use crate::sysapply::{ApplyMode, Overall, Session};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "evotune", version, about = "Genetic tuning of Linux network parameters")]
pub struct Cli {
    /// Log more (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the genetic search and report the best configuration.
    Run(Box<RunArgs>),
    /// Check a parameter file and list its ranges.
    Validate { path: PathBuf },
    /// Sample one configuration and print the commands that would apply it.
    Plan(PlanArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SpaceArgs {
    /// Parameter file: one `<command prefix>;<min>;<max>` line per parameter.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Built-in parameter catalog (listing1-14, table2-27).
    #[arg(long)]
    pub catalog: Option<String>,
}

impl SpaceArgs {
    fn source(&self) -> SpaceSource {
        match (&self.params, &self.catalog) {
            (Some(p), _) => SpaceSource::File(p.clone()),
            (None, Some(c)) => SpaceSource::Catalog(c.clone()),
            (None, None) => unreachable!("clap requires one of --params, --catalog"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvaluatorKind {
    /// Apply each configuration to this host and run the benchmark.
    Live,
    /// Score configurations with a simulation model.
    Sim,
    /// Look configurations up in a recorded cache.
    Replay,
}

#[derive(Debug, Args)]
pub struct GaArgs {
    #[arg(long, default_value_t = 80)]
    pub population: usize,
    #[arg(long, default_value_t = 40)]
    pub generations: usize,
    /// Fraction of the population replaced each generation.
    #[arg(long, default_value_t = 0.10)]
    pub selection: f64,
    /// Per-gene swap probability.
    #[arg(long, default_value_t = 0.50)]
    pub crossover: f64,
    /// Probability that an offspring gets one gene resampled.
    #[arg(long, default_value_t = 0.16)]
    pub mutation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mutate survivors too, not only offspring.
    #[arg(long)]
    pub mutate_survivors: bool,
}

impl GaArgs {
    pub fn config(&self) -> GaConfig {
        GaConfig {
            population_size: self.population,
            generations: self.generations,
            selection_fraction: self.selection,
            crossover_probability: self.crossover,
            mutation_probability: self.mutation,
            seed: self.seed,
            mutate_survivors: self.mutate_survivors,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, value_enum)]
    pub evaluator: EvaluatorKind,

    /// Benchmark server (live evaluator).
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long, default_value_t = live::DEFAULT_PORT)]
    pub port: u16,
    /// Benchmark length, seconds.
    #[arg(long, default_value_t = live::DEFAULT_DURATION_SECS)]
    pub duration: u64,
    /// Extra seconds before a benchmark counts as hung.
    #[arg(long, default_value_t = live::DEFAULT_GRACE_SECS)]
    pub grace: u64,
    /// Benchmark argv; {host}, {port} and {duration} are substituted.
    #[arg(long, default_value = live::DEFAULT_BENCHMARK)]
    pub benchmark_cmd: String,
    #[arg(long, value_enum, default_value_t)]
    pub benchmark_format: OutputFormat,
    /// Latency probe run once with the default and once with the best
    /// configuration after a live run, e.g. `hping3 -S -p {port} -c 20 {host}`.
    #[arg(long)]
    pub latency_cmd: Option<String>,

    /// Simulation model: a JSON file or an embedded fixture name.
    #[arg(long)]
    pub sim_fixture: Option<String>,
    /// Recorded measurements for the replay evaluator.
    #[arg(long)]
    pub replay_cache: Option<PathBuf>,
    /// Write every measurement of this run to a replay cache.
    #[arg(long)]
    pub record_cache: Option<PathBuf>,
    /// Baseline configuration in canonical form (genes comma separated,
    /// triples space separated).
    #[arg(long)]
    pub default_genes: Option<String>,

    #[command(flatten)]
    pub ga: GaArgs,

    #[arg(long)]
    pub report_json: Option<PathBuf>,
    #[arg(long)]
    pub report_csv: Option<PathBuf>,
    /// Log system commands instead of executing them; fitness is 0.
    #[arg(long)]
    pub dry_run: bool,
    /// Write interface attributes with `ifconfig` instead of `ip link`.
    #[arg(long)]
    pub legacy_ifconfig: bool,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub legacy_ifconfig: bool,
}

fn style(legacy: bool) -> RenderStyle {
    if legacy {
        RenderStyle::LegacyIfconfig
    } else {
        RenderStyle::IpLink
    }
}

/// What the CLI needs from its surroundings.
pub struct Context<R, W> {
    pub runner: R,
    pub out: W,
    /// Set by the signal handler; checked between evaluations.
    pub abort: Arc<AtomicBool>,
    /// `EVOTUNE_DRY_RUN=1` was set.
    pub force_dry_run: bool,
}

impl<R, W> Context<R, W> {
    pub fn new(runner: R, out: W) -> Self {
        Context { runner, out, abort: Arc::new(AtomicBool::new(false)), force_dry_run: false }
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn invalid(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_INVALID, error: error.into() }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_RUNTIME, error: error.into() }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (program name first). Help and version requests are
/// printed and yield `Err(0)`; usage errors yield `Err(1)`.
pub fn parse<I, T>(args: I) -> Result<Cli, u8>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map_err(|e| {
        let _ = e.print();
        if e.use_stderr() {
            EXIT_INVALID
        } else {
            EXIT_OK
        }
    })
}

/// Runs one command and returns the process exit code.
pub fn execute<R: CommandRunner, W: Write>(cli: Cli, ctx: &mut Context<R, W>) -> u8 {
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args, ctx),
        Command::Validate { path } => cmd_validate(&path, &mut ctx.out),
        Command::Plan(args) => cmd_plan(&args, &mut ctx.out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            code
        }
    }
}

/// [`parse`] then [`execute`].
pub fn main_with<I, T, R, W>(args: I, ctx: &mut Context<R, W>) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    R: CommandRunner,
    W: Write,
{
    match parse(args) {
        Ok(cli) => execute(cli, ctx),
        Err(code) => code,
    }
}

fn range_text(kind: &ValueKind) -> String {
    match kind {
        ValueKind::IntRange { min, max } => format!("{min} .. {max}"),
        ValueKind::TripleRange { min, max } => format!(
            "'{} {} {}' .. '{} {} {}'",
            min[0], min[1], min[2], max[0], max[1], max[2]
        ),
    }
}

fn cmd_validate(path: &Path, out: &mut impl Write) -> Outcome {
    let space = files::read_params(path).map_err(invalid)?;
    if space.is_empty() {
        writeln!(out, "warning: 0 parameters").map_err(runtime)?;
        return Ok(());
    }
    writeln!(out, "{} parameters OK", space.len()).map_err(runtime)?;
    for spec in &space {
        writeln!(out, "  {}: {}", spec.key(), range_text(spec.kind())).map_err(runtime)?;
    }
    Ok(())
}

fn cmd_plan(args: &PlanArgs, out: &mut impl Write) -> Outcome {
    let space = files::load_space(&args.space.source()).map_err(invalid)?;
    let c = sample_chromosome(&space, &mut RandomSource::from_seed(args.seed));
    for cmd in render_apply_commands(&space, &c, style(args.legacy_ifconfig)).map_err(invalid)? {
        writeln!(out, "{cmd}").map_err(runtime)?;
    }
    Ok(())
}

fn parse_default(space: &ParameterSpace, text: &str) -> Result<Chromosome, Failure> {
    Chromosome::from_canonical(space, text)
        .map_err(|e| invalid(anyhow!(e).context("--default-genes")))
}

fn fallback_default(space: &ParameterSpace) -> Chromosome {
    log::warn!("no default configuration given; using every parameter's lower bound as the baseline");
    Chromosome::lower_bounds(space)
}

fn sim_model(args: &RunArgs) -> Result<Option<SimModel>, Failure> {
    args.sim_fixture
        .as_deref()
        .map(|f| files::load_sim_model(f).map_err(invalid))
        .transpose()
}

/// Runs the engine, optionally recording every measurement.
fn drive<E: FitnessEvaluator>(
    space: &ParameterSpace,
    config: &GaConfig,
    evaluator: E,
    default: &Chromosome,
    record: Option<&Path>,
) -> Result<RunReport, Failure>
where
    E::Error: Send + Sync,
{
    let result = match record {
        None => engine::run(space, config, evaluator, default),
        Some(path) => {
            let mut rec = Recording::new(evaluator);
            let result = engine::run(space, config, &mut rec, default);
            // keep partial recordings too; live measurements are expensive
            files::write_cache(path, rec.cache()).map_err(runtime)?;
            result
        }
    };
    result.map_err(|e| match e {
        RunError::Setup(e) => invalid(e),
        e @ RunError::Evaluation { .. } => runtime(anyhow!("{e}")),
    })
}

fn cmd_run<R: CommandRunner, W: Write>(args: &RunArgs, ctx: &mut Context<R, W>) -> Outcome {
    let space = files::load_space(&args.space.source()).map_err(invalid)?;
    let config = args.ga.config();
    config.validate().map_err(invalid)?;
    let record = args.record_cache.as_deref();
    let given_default = args.default_genes.as_deref().map(|t| parse_default(&space, t)).transpose()?;

    let (report, latency) = match args.evaluator {
        EvaluatorKind::Sim => {
            let model = sim_model(args)?.ok_or_else(|| invalid(anyhow!("--evaluator sim needs --sim-fixture")))?;
            let default = match given_default {
                Some(d) => d,
                None => model.default.clone().unwrap_or_else(|| fallback_default(&space)),
            };
            let eval = SimulatedEvaluator::new(&space, model, config.seed).map_err(invalid)?;
            (drive(&space, &config, eval, &default, record)?, None)
        }
        EvaluatorKind::Replay => {
            let path = args
                .replay_cache
                .as_deref()
                .ok_or_else(|| invalid(anyhow!("--evaluator replay needs --replay-cache")))?;
            let cache = files::read_cache(path).map_err(invalid)?;
            let default = match (given_default, sim_model(args)?.and_then(|m| m.default)) {
                (Some(d), _) | (None, Some(d)) => d,
                (None, None) => fallback_default(&space),
            };
            (drive(&space, &config, ReplayEvaluator::new(cache), &default, record)?, None)
        }
        EvaluatorKind::Live => run_live(args, &space, &config, given_default, ctx)?,
    };

    if let Some(path) = &args.report_json {
        files::write_report_json(path, &report).map_err(runtime)?;
    }
    if let Some(path) = &args.report_csv {
        files::write_report_csv(path, &report).map_err(runtime)?;
    }
    summary(&mut ctx.out, &space, &report, latency, style(args.legacy_ifconfig)).map_err(runtime)
}

type Latencies = Option<(evotune_core::fitness::LatencyReport, evotune_core::fitness::LatencyReport)>;

fn run_live<R: CommandRunner, W: Write>(
    args: &RunArgs,
    space: &ParameterSpace,
    config: &GaConfig,
    given_default: Option<Chromosome>,
    ctx: &mut Context<R, W>,
) -> Result<(RunReport, Latencies), Failure> {
    let requested = if args.dry_run { ApplyMode::DryRun } else { ApplyMode::Live };
    let mode = ApplyMode::resolve(requested, ctx.force_dry_run);
    let host = match (&args.host, mode) {
        (Some(h), _) => h.clone(),
        (None, ApplyMode::DryRun) => "localhost".to_string(),
        (None, ApplyMode::Live) => return Err(invalid(anyhow!("--evaluator live needs --host"))),
    };
    let template = CommandTemplate::parse(&args.benchmark_cmd)
        .ok_or_else(|| invalid(anyhow!("--benchmark-cmd is empty")))?;
    let latency_template = args
        .latency_cmd
        .as_deref()
        .map(|t| CommandTemplate::parse(t).ok_or_else(|| invalid(anyhow!("--latency-cmd is empty"))))
        .transpose()?;
    let bench = BenchmarkConfig {
        template,
        host,
        port: args.port,
        duration_secs: args.duration,
        grace_secs: args.grace,
        format: args.benchmark_format,
    };

    let session = Session::begin(&mut ctx.runner, space, mode, style(args.legacy_ifconfig))
        .context("snapshot of current settings")
        .map_err(runtime)?;
    let default = match (given_default, session.snapshot()) {
        (Some(d), _) => d,
        (None, Some(snap)) => snap.to_chromosome(space).context("snapshot as baseline").map_err(runtime)?,
        (None, None) => fallback_default(space),
    };
    let mut eval = LiveEvaluator::new(session, bench, Arc::clone(&ctx.abort));

    let result = drive(space, config, &mut eval, &default, args.record_cache.as_deref());
    let latency = match (&result, &latency_template) {
        (Ok(report), Some(t)) => measure_latency(&mut eval, &default, &report.overall_best.chromosome, t),
        _ => None,
    };
    let restored = eval.session_mut().restore();
    if let Some(outcome) = &restored {
        if outcome.overall == Overall::PartiallyApplied {
            let (target, e) = outcome.first_failure().expect("partial restore has a failure");
            let err = runtime(anyhow!("restoring {target} failed: {e}; the system may still run a tuned configuration"));
            return Err(match result {
                Err(f) => Failure { code: f.code.max(EXIT_RUNTIME), error: f.error.context(err.error) },
                Ok(_) => err,
            });
        }
    }
    result.map(|r| (r, latency))
}

fn measure_latency<R: CommandRunner>(
    eval: &mut LiveEvaluator<R>,
    default: &Chromosome,
    best: &Chromosome,
    template: &CommandTemplate,
) -> Latencies {
    let mut probe = |c: &Chromosome| match eval.latency(c, template) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("latency probe failed: {e}");
            None
        }
    };
    Some((probe(default)?, probe(best)?))
}

fn percent(v: Option<f64>) -> String {
    v.map(|p| format!("{p:+.2} %")).unwrap_or_else(|| "n/a (default scored 0)".to_string())
}

fn summary(
    out: &mut impl Write,
    space: &ParameterSpace,
    report: &RunReport,
    latency: Latencies,
    style: RenderStyle,
) -> std::io::Result<()> {
    let best = report.overall_best_fitness();
    let found = report.per_generation.iter().find(|g| g.best >= best).map(|g| g.generation).unwrap_or(0);
    writeln!(out, "generations: {}, evaluations: {}", report.per_generation.len(), report.evaluation_count)?;
    writeln!(out, "overall best: {best:.2} Mbit/s (generation {found})")?;
    writeln!(out, "mean default: {:.2} Mbit/s", report.mean_default())?;
    writeln!(out, "best vs mean default: {}", percent(report.best_gain_percent()))?;
    writeln!(out, "mean best vs mean default: {}", percent(report.mean_best_gain_percent()))?;
    if let Some((d, b)) = latency {
        writeln!(out, "latency default: round-trip min/avg/max = {}/{}/{} ms", d.min_ms, d.avg_ms, d.max_ms)?;
        writeln!(out, "latency best: round-trip min/avg/max = {}/{}/{} ms", b.min_ms, b.avg_ms, b.max_ms)?;
    }
    writeln!(out, "winning configuration:")?;
    let commands = render_gene_commands(space, &report.overall_best.chromosome, style)
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    for cmd in commands {
        writeln!(out, "  {cmd}")?;
    }
    Ok(())
}
