//! External command execution.

use std::io::Read;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

/// Captured result of a finished command.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandOutput {
    pub success: bool,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutput {
    pub fn ok(stdout: impl Into<String>) -> Self {
        CommandOutput { success: true, stdout: stdout.into(), stderr: String::new() }
    }

    pub fn failed(stderr: impl Into<String>) -> Self {
        CommandOutput { success: false, stdout: String::new(), stderr: stderr.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("cannot start {program}: {source}")]
    Spawn { program: String, source: std::io::Error },
    #[error("{program} still running after {timeout:?}")]
    Timeout { program: String, timeout: Duration },
    #[error("{program} interrupted")]
    Interrupted { program: String },
}

/// Runs argv vectors. Never goes through a shell.
pub trait CommandRunner {
    fn run(&mut self, argv: &[String], timeout: Duration) -> Result<CommandOutput, RunnerError>;
}

impl<R: CommandRunner + ?Sized> CommandRunner for &mut R {
    fn run(&mut self, argv: &[String], timeout: Duration) -> Result<CommandOutput, RunnerError> {
        (**self).run(argv, timeout)
    }
}

impl<R: CommandRunner + ?Sized> CommandRunner for Box<R> {
    fn run(&mut self, argv: &[String], timeout: Duration) -> Result<CommandOutput, RunnerError> {
        (**self).run(argv, timeout)
    }
}

/// Spawns real processes.
#[derive(Debug, Clone, Default)]
pub struct SystemRunner {
    abort: Option<Arc<AtomicBool>>,
}

const POLL: Duration = Duration::from_millis(20);

impl SystemRunner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Kills the running child as soon as `flag` becomes true.
    pub fn with_abort_flag(flag: Arc<AtomicBool>) -> Self {
        SystemRunner { abort: Some(flag) }
    }

    fn aborted(&self) -> bool {
        self.abort.as_ref().is_some_and(|f| f.load(Ordering::SeqCst))
    }
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

impl CommandRunner for SystemRunner {
    fn run(&mut self, argv: &[String], timeout: Duration) -> Result<CommandOutput, RunnerError> {
        let program = argv.first().cloned().unwrap_or_default();
        log::debug!("exec {}", argv.join(" "));
        let mut child = Command::new(&program)
            .args(&argv[1.min(argv.len())..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| RunnerError::Spawn { program: program.clone(), source })?;
        let out = drain(child.stdout.take());
        let err = drain(child.stderr.take());

        let deadline = Instant::now() + timeout;
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) => {}
                Err(source) => return Err(RunnerError::Spawn { program, source }),
            }
            let interrupted = self.aborted();
            if interrupted || Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Err(if interrupted {
                    RunnerError::Interrupted { program }
                } else {
                    RunnerError::Timeout { program, timeout }
                });
            }
            thread::sleep(POLL);
        };
        Ok(CommandOutput {
            success: status.success(),
            stdout: out.join().unwrap_or_default(),
            stderr: err.join().unwrap_or_default(),
        })
    }
}
