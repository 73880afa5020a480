use std::io;
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use evotune::cli::{self, Context};
use evotune::live::install_abort_handler;
use evotune::runner::SystemRunner;
use evotune::sysapply::dry_run_forced;

fn main() -> ExitCode {
    let cli = match cli::parse(std::env::args_os()) {
        Ok(cli) => cli,
        Err(code) => return ExitCode::from(code),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let abort = install_abort_handler().unwrap_or_else(|e| {
        log::warn!("cannot install signal handlers: {e}");
        Arc::new(AtomicBool::new(false))
    });
    let mut ctx = Context {
        runner: SystemRunner::with_abort_flag(Arc::clone(&abort)),
        out: io::stdout().lock(),
        abort,
        force_dry_run: dry_run_forced(),
    };
    ExitCode::from(cli::execute(cli, &mut ctx))
}
