#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use evotune::cli::{self, Context};
use evotune::core::paramspace::ParameterSpace;
use evotune::runner::{CommandOutput, CommandRunner, RunnerError};

/// Stock values of a host before tuning. `tcp_mem` is below the search
/// range, as it is on most machines.
pub const STOCK: [(&str, &str); 15] = [
    ("net.ipv4.tcp_mem", "188121 250829 376242"),
    ("net.ipv4.tcp_rmem", "4096 131072 6291456"),
    ("net.ipv4.tcp_wmem", "4096 16384 4194304"),
    ("net.ipv4.tcp_moderate_rcvbuf", "1"),
    ("net.ipv4.tcp_no_metrics_save", "0"),
    ("net.ipv4.tcp_timestamps", "1"),
    ("net.ipv4.tcp_window_scaling", "1"),
    ("net.ipv4.tcp_sack", "1"),
    ("net.core.wmem_max", "212992"),
    ("net.core.rmem_max", "212992"),
    ("net.core.rmem_default", "212992"),
    ("net.core.wmem_default", "212992"),
    ("net.core.netdev_max_backlog", "1000"),
    ("eno2.mtu", "1500"),
    ("eno2.txqueuelen", "1000"),
];

pub const NETPERF_OUT: &str = "MIGRATED TCP STREAM TEST from 0.0.0.0 (0.0.0.0) port 0 AF_INET to 10.0.0.1 () port 0 AF_INET\n\
Recv   Send    Send\n\
Socket Socket  Message  Elapsed\n\
Size   Size    Size     Time     Throughput\n\
bytes  bytes   bytes    secs.    10^6bits/sec\n\
\n\
 87380  16384  16384    10.02     {mbps}\n";

/// A fake host: sysctl keys and interface attributes in a map, every
/// command logged.
pub struct StubSystem {
    pub state: BTreeMap<String, String>,
    pub log: Vec<Vec<String>>,
    /// Writes to these keys fail.
    pub reject: BTreeSet<String>,
    /// The n-th write command (1-based) fails.
    pub fail_write: Option<usize>,
    pub writes: usize,
    pub bench_calls: usize,
    /// The benchmark exits non-zero from this call on (1-based).
    pub bench_fails_from: Option<usize>,
    /// Raise the flag after this many benchmark calls.
    pub abort_after: Option<(usize, Arc<AtomicBool>)>,
}

impl Default for StubSystem {
    fn default() -> Self {
        StubSystem {
            state: STOCK.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            log: Vec::new(),
            reject: BTreeSet::new(),
            fail_write: None,
            writes: 0,
            bench_calls: 0,
            bench_fails_from: None,
            abort_after: None,
        }
    }
}

impl StubSystem {
    pub fn stock() -> BTreeMap<String, String> {
        StubSystem::default().state
    }

    fn write(&mut self, key: String, value: String) -> CommandOutput {
        self.writes += 1;
        if self.reject.contains(&key) || self.fail_write == Some(self.writes) {
            return CommandOutput::failed(format!("permission denied on key '{key}'"));
        }
        self.state.insert(key, value);
        CommandOutput::ok("")
    }

    /// Throughput the fake benchmark reports for the current state.
    fn throughput(&self) -> f64 {
        let mtu: f64 = self.state["eno2.mtu"].parse().unwrap_or(1500.0);
        let backlog: f64 = self.state["net.core.netdev_max_backlog"].parse().unwrap_or(1000.0);
        500.0 + (mtu - 1500.0) / 6.0 + (backlog - 1000.0) / 40.0
    }

    /// Write commands only, as (key, value).
    pub fn writes_issued(&self) -> Vec<(String, String)> {
        self.log.iter().filter_map(|a| parse_write(a)).collect()
    }

    /// Number of complete restores: runs of consecutive writes covering
    /// every key of `space` in reverse order.
    pub fn restore_count(&self, space: &ParameterSpace) -> usize {
        let reversed: Vec<String> = space.iter().rev().map(|s| s.key()).collect();
        let keys: Vec<String> = self.writes_issued().into_iter().map(|(k, _)| k).collect();
        if reversed.is_empty() {
            return 0;
        }
        keys.windows(reversed.len()).filter(|w| *w == reversed.as_slice()).count()
    }
}

pub fn parse_write(argv: &[String]) -> Option<(String, String)> {
    let a: Vec<&str> = argv.iter().map(String::as_str).collect();
    match a.as_slice() {
        ["sysctl", "-w", assign] => assign.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())),
        ["ip", "link", "set", "dev", i, attr, v] | ["ifconfig", i, attr, v] => Some((format!("{i}.{attr}"), v.to_string())),
        _ => None,
    }
}

impl CommandRunner for StubSystem {
    fn run(&mut self, argv: &[String], _timeout: Duration) -> Result<CommandOutput, RunnerError> {
        self.log.push(argv.to_vec());
        if let Some((k, v)) = parse_write(argv) {
            return Ok(self.write(k, v));
        }
        let a: Vec<&str> = argv.iter().map(String::as_str).collect();
        Ok(match a.as_slice() {
            ["sysctl", "-n", key] => match self.state.get(*key) {
                Some(v) => CommandOutput::ok(format!("{}\n", v.replace(' ', "\t"))),
                None => CommandOutput::failed(format!("sysctl: cannot stat /proc/sys/{key}: No such file or directory")),
            },
            ["ip", "-o", "link", "show", "dev", iface] => match (self.state.get(&format!("{iface}.mtu")), self.state.get(&format!("{iface}.txqueuelen"))) {
                (Some(mtu), Some(q)) => CommandOutput::ok(format!(
                    "2: {iface}: <BROADCAST,MULTICAST,UP,LOWER_UP> mtu {mtu} qdisc mq state UP mode DEFAULT group default qlen {q}\\    link/ether 00:11:22:33:44:55 brd ff:ff:ff:ff:ff:ff\n"
                )),
                _ => CommandOutput::failed(format!("Device \"{iface}\" does not exist.")),
            },
            ["netperf", ..] => {
                self.bench_calls += 1;
                if let Some((n, flag)) = &self.abort_after {
                    if self.bench_calls >= *n {
                        flag.store(true, Ordering::SeqCst);
                    }
                }
                if self.bench_fails_from.is_some_and(|n| self.bench_calls >= n) {
                    CommandOutput::failed("establish control: are you sure there is a netserver listening?")
                } else {
                    CommandOutput::ok(NETPERF_OUT.replace("{mbps}", &format!("{:.2}", self.throughput())))
                }
            }
            ["hping3", ..] => CommandOutput::ok("--- 10.0.0.1 hping statistic ---\nround-trip min/avg/max = 1.2/6.8/1005.8 ms\n"),
            _ => CommandOutput::failed(format!("stub: unknown command {argv:?}")),
        })
    }
}

pub fn args(line: &str) -> Vec<String> {
    std::iter::once("evotune".to_string()).chain(line.split_whitespace().map(str::to_string)).collect()
}

/// Runs the CLI in-process; returns (exit code, stdout). `line` is split
/// on whitespace; `extra` arguments are appended verbatim.
pub fn run_cli_with<R: CommandRunner>(ctx: &mut Context<R, Vec<u8>>, line: &str, extra: &[&str]) -> (u8, String) {
    ctx.out.clear();
    let mut argv = args(line);
    argv.extend(extra.iter().map(|s| s.to_string()));
    let code = cli::main_with(argv, ctx);
    (code, String::from_utf8(ctx.out.clone()).unwrap())
}

pub fn run_cli<R: CommandRunner>(ctx: &mut Context<R, Vec<u8>>, line: &str) -> (u8, String) {
    run_cli_with(ctx, line, &[])
}

pub fn stub_ctx() -> Context<StubSystem, Vec<u8>> {
    Context::new(StubSystem::default(), Vec::new())
}

pub fn path_str(p: &std::path::Path) -> String {
    p.to_str().unwrap().to_string()
}
